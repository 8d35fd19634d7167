// Writes the desk-scale double-track fixture: route, timetable derived from a
// single-train loop run, OD rates, scenarios and episode/training configs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include <json.hpp>

#include "railsim/error.hpp"
#include "railsim/io.hpp"
#include "railsim/route.hpp"
#include "railsim/sim.hpp"
#include "railsim/timetable.hpp"

using namespace railsim;
using nlohmann::json;

namespace {

constexpr int kStations = 8;
constexpr double kPlatformLength = 250.0;
constexpr double kPlatformSpeed = 20.0;
constexpr double kLineSpeed = 25.0;
constexpr double kCrossoverLength = 120.0;
constexpr double kCrossoverSpeed = 10.0;
constexpr double kDepotLength = 300.0;
constexpr int kTrains = 6;
constexpr Seconds kLayover = 120;
constexpr Seconds kServiceStart = 5 * 3600;
constexpr Seconds kLastDeparture = 23 * 3600;

const std::array<std::array<double, 3>, kStations - 1> kSections{{
    {600, 650, 550},
    {700, 750, 650},
    {500, 550, 450},
    {800, 850, 750},
    {550, 600, 500},
    {650, 700, 600},
    {600, 650, 550},
}};

const std::array<const char*, kStations> kNames{"Ashby", "Brook", "Carrow", "Dunmore",
                                                "Elsfield", "Farley", "Glenn", "Harwick"};

std::string up_block(int a, int k) { return "U" + std::to_string(a) + std::to_string(a + 1) + "_" + std::to_string(k); }
std::string down_block(int a, int k) {
  return "D" + std::to_string(a + 1) + std::to_string(a) + "_" + std::to_string(k);
}
std::string up_platform(int s) {
  return s == 0 ? "P0" : s == kStations - 1 ? "P7" : "P" + std::to_string(s) + "_u";
}
std::string down_platform(int s) {
  return s == 0 ? "P0" : s == kStations - 1 ? "P7" : "P" + std::to_string(s) + "_d";
}
bool turnaround(int s) { return s == 0 || s == 2 || s == 5 || s == kStations - 1; }

RouteDocument build_route() {
  RouteDocument doc;
  auto add = [&](std::string id, double len, double vmax, std::vector<std::string> up,
                 std::vector<std::string> down, bool platform = false) {
    doc.blocks.push_back({std::move(id), len, vmax, std::move(up), std::move(down), platform});
  };
  for (int s = 0; s < kStations; ++s) {
    StationSpec st;
    st.id = "S" + std::to_string(s);
    st.name = kNames[static_cast<std::size_t>(s)];
    st.can_turn_back = turnaround(s);
    st.has_depot = s == 0 || s == kStations - 1;
    if (s == 0 || s == kStations - 1) {
      st.platforms.push_back({"1", up_platform(s), 1200});
    } else {
      st.platforms.push_back({"1", up_platform(s), 600});
      st.platforms.push_back({"2", down_platform(s), 600});
    }
    doc.stations.push_back(st);
  }

  // Terminal S0: trains arrive heading down, reverse, then cross over or stable.
  add("P0", kPlatformLength, kPlatformSpeed, {"X0", "Y0"}, {}, true);
  add("X0", kCrossoverLength, kCrossoverSpeed, {up_block(0, 1)}, {});
  add("Y0", kDepotLength, kCrossoverSpeed, {}, {});
  for (int a = 0; a + 1 < kStations; ++a) {
    const auto& len = kSections[static_cast<std::size_t>(a)];
    for (int k = 1; k <= 3; ++k) {
      const std::string next_up = k < 3 ? up_block(a, k + 1) : up_platform(a + 1);
      add(up_block(a, k), len[static_cast<std::size_t>(k - 1)], kLineSpeed, {next_up}, {});
      const std::string next_down = k < 3 ? down_block(a, k + 1) : down_platform(a);
      add(down_block(a, k), len[static_cast<std::size_t>(3 - k)], kLineSpeed, {}, {next_down});
    }
  }
  for (int s = 1; s + 1 < kStations; ++s) {
    const std::string u = up_platform(s);
    const std::string d = down_platform(s);
    if (turnaround(s)) {
      const std::string xd = "X" + std::to_string(s) + "d";
      const std::string xu = "X" + std::to_string(s) + "u";
      add(u, kPlatformLength, kPlatformSpeed, {up_block(s, 1)}, {xd}, true);
      add(d, kPlatformLength, kPlatformSpeed, {xu}, {down_block(s - 1, 1)}, true);
      add(xd, kCrossoverLength, kCrossoverSpeed, {}, {down_block(s - 1, 1)});
      add(xu, kCrossoverLength, kCrossoverSpeed, {up_block(s, 1)}, {});
    } else {
      add(u, kPlatformLength, kPlatformSpeed, {up_block(s, 1)}, {}, true);
      add(d, kPlatformLength, kPlatformSpeed, {}, {down_block(s - 1, 1)}, true);
    }
  }
  add("P7", kPlatformLength, kPlatformSpeed, {}, {"X7", "Y7"}, true);
  add("X7", kCrossoverLength, kCrossoverSpeed, {}, {down_block(kStations - 2, 1)});
  add("Y7", kDepotLength, kCrossoverSpeed, {}, {});

  doc.junctions.push_back({"J0",
                           {{"tb0", {"X0", up_block(0, 1)}, "J0_tb", {"depot0"}},
                            {"depot0", {"Y0"}, "J0_dep", {"tb0"}}}});
  for (int s : {2, 5}) {
    const std::string n = std::to_string(s);
    doc.junctions.push_back({"J" + n,
                             {{"tb" + n + "d", {"X" + n + "d", down_block(s - 1, 1)}, "J" + n + "_d", {}},
                              {"tb" + n + "u", {"X" + n + "u", up_block(s, 1)}, "J" + n + "_u", {}}}});
  }
  doc.junctions.push_back({"J7",
                           {{"tb7", {"X7", down_block(kStations - 2, 1)}, "J7_tb", {"depot7"}},
                            {"depot7", {"Y7"}, "J7_dep", {"tb7"}}}});
  return doc;
}

struct Visit {
  int station = -1;
  std::string platform;
  Seconds arrive = 0;
  Seconds depart = 0;
  bool terminal = false;
};

// Runs one train around the loop S0 -> S7 -> S0 and records its stops.
std::vector<Visit> loop_run(const RouteModel& model) {
  OdMatrix od;
  Simulator sim(model, od, SimParams{});
  const BlockIndex p0 = *model.find_block("P0");
  std::vector<TrainPlacement> pl{{"loop", p0, kPlatformLength, Direction::kUp, 160.0, 800, true}};
  SimState s = sim.init(pl, 0, 0);
  std::vector<Visit> visits;
  visits.push_back({0, "1", 0, 0, true});
  const int tb0 = *model.find_route("tb0");
  const int tb7 = *model.find_route("tb7");
  Seconds arrived = 0;
  bool started = false;
  int laps = 0;
  for (Seconds t = 0; t < 40000 && laps < 2; ++t) {
    std::vector<Command> cmds;
    const int train = s.trains[0].head() >= 0 ? 0 : -1;
    const TrainState& tr = s.trains[0];
    const BlockIndex head = tr.head();
    if (train == 0 && sim.train_ready_at(s, head) == 0) {
      const Block& b = model.block(head);
      const bool terminal = b.station == 0 || b.station == kStations - 1;
      if (!terminal) {
        cmds.push_back(SetSignal{model.departure_point(head, tr.direction), Aspect::kProceed});
      } else if (!started || t >= arrived + kLayover) {
        const int route = b.station == 0 ? tb0 : tb7;
        const Direction out = b.station == 0 ? Direction::kUp : Direction::kDown;
        if (tr.direction != out) cmds.push_back(ReverseTrain{0});
        if (!s.locks[static_cast<std::size_t>(route)].locked) {
          cmds.push_back(RequestRoute{route});
        } else {
          cmds.push_back(SetSignal{model.routes()[static_cast<std::size_t>(route)].entry_point, Aspect::kProceed});
        }
      }
    }
    for (const auto& e : sim.step(s, cmds)) {
      if (e.kind == EventKind::kReject) throw Error(ErrorCode::kInvariant, "loop run rejected: " + e.detail);
      if (e.kind == EventKind::kArrive) {
        arrived = e.t;
        const Block& b = model.block(e.block);
        const auto& st = model.stations()[static_cast<std::size_t>(b.station)];
        Visit v;
        v.station = b.station;
        v.platform = st.platforms[static_cast<std::size_t>(b.platform)].id;
        v.arrive = e.t;
        v.terminal = b.station == 0 || b.station == kStations - 1;
        visits.push_back(v);
      } else if (e.kind == EventKind::kDepart) {
        if (!started) {
          started = true;
          visits.front().depart = e.t;
          continue;
        }
        visits.back().depart = e.t;
        if (e.station == 0) ++laps;
      }
    }
  }
  if (laps < 2) throw Error(ErrorCode::kInvariant, "loop run did not complete two laps");
  // The first lap starts from a placement, not from a reversal; keep the second.
  std::size_t from = 1;
  while (visits[from].station != 0) ++from;
  visits.erase(visits.begin(), visits.begin() + static_cast<std::ptrdiff_t>(from));
  const Seconds t0 = visits.front().depart;
  for (auto& v : visits) {
    v.arrive -= t0;
    v.depart -= t0;
  }
  return visits;
}

Timetable build_timetable(const RouteModel& model, const std::vector<Visit>& loop) {
  // loop.front() and loop.back() are both the S0 stop; one lap is loop[0..n-1].
  const Seconds cycle = loop.back().depart;
  const std::size_t n = loop.size() - 1;
  Timetable tt;
  // Start each train at the intermediate stop nearest its phase, then shift its
  // clock so consecutive trains are exactly cycle / kTrains apart.
  std::vector<std::size_t> starts;
  std::vector<Seconds> lag;
  for (int k = 0; k < kTrains; ++k) {
    const Seconds phase = (cycle * k + kTrains / 2) / kTrains;
    std::size_t start = 1;
    Seconds best = std::numeric_limits<Seconds>::max();
    for (std::size_t i = 1; i < n; ++i) {
      if (loop[i].terminal) continue;
      const Seconds d = std::abs(loop[i].depart - phase);
      if (d < best) {
        best = d;
        start = i;
      }
    }
    starts.push_back(start);
    lag.push_back(loop[start].depart - phase);
  }
  const Seconds min_lag = *std::min_element(lag.begin(), lag.end());
  for (int k = 0; k < kTrains; ++k) {
    const std::size_t start = starts[static_cast<std::size_t>(k)];
    const std::string name = "T" + std::to_string(k + 1);
    const Seconds first_departure = kServiceStart + 60 + lag[static_cast<std::size_t>(k)] - min_lag;
    const Seconds shift = first_departure - loop[start].depart;
    tt.entries.push_back({name, loop[start].station, kServiceStart, first_departure, loop[start].platform,
                          PostAction::kProceed});
    for (std::size_t j = start + 1;; ++j) {
      const Visit& v = loop[(j - 1) % n + 1];
      const Seconds base = shift + static_cast<Seconds>((j - 1) / n) * cycle;
      TimetableEntry e{name, v.station, base + v.arrive, base + v.depart, v.platform,
                       v.terminal ? PostAction::kTurnBack : PostAction::kProceed};
      if (v.terminal && e.arrive_s >= kLastDeparture) {
        e.post_action = PostAction::kToDepot;
        tt.entries.push_back(e);
        break;
      }
      tt.entries.push_back(e);
    }
  }
  validate_timetable(tt, model);
  return tt;
}

std::string build_od() {
  // Relative station weights: busier toward the middle of the line.
  const std::array<double, kStations> weight{1.2, 0.8, 1.0, 1.3, 1.4, 0.9, 0.8, 1.1};
  struct Bucket {
    Seconds start;
    double total_pps;
  };
  const std::vector<Bucket> buckets{{0, 0.0},         {5 * 3600, 0.3},  {7 * 3600, 0.9},  {9 * 3600 + 1800, 0.5},
                                    {16 * 3600 + 1800, 0.8}, {19 * 3600, 0.35}, {23 * 3600, 0.0}};
  double norm = 0.0;
  for (int o = 0; o < kStations; ++o) {
    for (int d = 0; d < kStations; ++d) {
      if (o != d) norm += weight[static_cast<std::size_t>(o)] * weight[static_cast<std::size_t>(d)];
    }
  }
  std::ostringstream out;
  out << "origin,destination,bucket_start_s,rate_pps\n";
  for (int o = 0; o < kStations; ++o) {
    for (int d = 0; d < kStations; ++d) {
      if (o == d) continue;
      for (const auto& b : buckets) {
        const double r = b.total_pps * weight[static_cast<std::size_t>(o)] * weight[static_cast<std::size_t>(d)] / norm;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", r);
        out << 'S' << o << ",S" << d << ',' << b.start << ',' << buf << '\n';
      }
    }
  }
  return out.str();
}

std::vector<std::string> section_blocks(int a, bool up, bool down) {
  std::vector<std::string> out;
  for (int k = 1; k <= 3; ++k) {
    if (up) out.push_back(up_block(a, k));
  }
  for (int k = 1; k <= 3; ++k) {
    if (down) out.push_back(down_block(a, k));
  }
  return out;
}

json scenario(const std::vector<std::string>& blocks, const std::string& start, Seconds duration,
              const std::string& sim_start, Seconds horizon) {
  return {{"sim_start", sim_start},
          {"horizon_s", horizon},
          {"disruptions", json::array({{{"blocks", blocks}, {"start", start}, {"duration_s", duration}}})}};
}

void write_json(const std::filesystem::path& p, const json& j) { write_file_atomic(p.string(), j.dump(2) + "\n"); }

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "fixtures/desk_line";
  try {
    const RouteDocument doc = build_route();
    const std::string route_json = serialize_route_document(doc);
    const RouteModel model = parse_route_config(route_json);
    const auto loop = loop_run(model);
    const Timetable tt = build_timetable(model, loop);

    write_file_atomic((dir / "route.json").string(), route_json);
    write_file_atomic((dir / "timetable.csv").string(), serialize_timetable_csv(tt, model));
    write_file_atomic((dir / "od.csv").string(), build_od());

    const auto midline = section_blocks(3, true, true);
    const auto toy = section_blocks(6, true, true);
    write_json(dir / "scenario_none.json", {{"sim_start", "07:45:00"}, {"horizon_s", 10800}, {"disruptions", json::array()}});
    write_json(dir / "scenario_midline.json", scenario(midline, "08:03:00", 1800, "07:45:00", 10800));
    write_json(dir / "scenario_fullday.json", scenario(midline, "08:03:00", 1800, format_hms(kServiceStart), 24 * 3600 - kServiceStart));
    write_json(dir / "scenario_toy.json", scenario(toy, "08:00:00", 1800, "07:50:00", 5400));

    write_json(dir / "episode_midline.json",
               {{"route", "route.json"},
                {"timetable", "timetable.csv"},
                {"od", "od.csv"},
                {"sim_start_window", {"07:30:00", "07:45:00"}},
                {"disruption",
                 {{"location_sets", {midline}},
                  {"start_window", {"07:50:00", "08:30:00"}},
                  {"duration_range_s", {1500, 2100}}}},
                {"horizon_s", 10800},
                {"decision_interval_s", 60},
                {"weights", "experiment"},
                {"seed", 1}});
    write_json(dir / "episode_toy.json",
               {{"route", "route.json"},
                {"timetable", "timetable.csv"},
                {"od", "od.csv"},
                {"sim_start_window", {"07:50:00", "07:50:00"}},
                {"disruption",
                 {{"location_sets", {toy}}, {"start_window", {"08:00:00", "08:00:00"}}, {"duration_range_s", {1800, 1800}}}},
                {"horizon_s", 5400},
                {"decision_interval_s", 60},
                {"weights", "experiment"},
                {"seed", 7}});
    write_json(dir / "train_midline.json",
               {{"iterations", 400},
                {"envs_per_iteration", 16},
                {"learning_rate", 1e-3},
                {"entropy_coef", 1e-3},
                {"gamma", 0.95},
                {"lambda", 0.9},
                {"seed", 1}});
    write_json(dir / "train_toy.json", {{"iterations", 150}, {"envs_per_iteration", 8}, {"learning_rate", 1e-3}, {"seed", 1}});
    std::printf("cycle %lld s, %zu timetable entries, %zu control points\n",
                static_cast<long long>(loop.back().depart), tt.entries.size(), model.control_points().size());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_fixture: %s\n", e.what());
    return 1;
  }
  return 0;
}
