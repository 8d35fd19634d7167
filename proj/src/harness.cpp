#include "railsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <json.hpp>

#include "railsim/error.hpp"
#include "railsim/io.hpp"

namespace railsim {

using nlohmann::json;

namespace {

Seconds read_time(const json& j) {
  if (j.is_number_integer()) return j.get<Seconds>();
  if (j.is_string()) return parse_hms(j.get<std::string>());
  throw Error(ErrorCode::kParse, "expected seconds or \"HH:MM:SS\"");
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double round_mm(double x) { return std::round(x * 1000.0) / 1000.0; }

}  // namespace

Scenario parse_scenario(std::string_view text, const RouteModel& model) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("scenario: ") + e.what());
  }
  Scenario s;
  s.fingerprint = fnv1a(text);
  try {
    s.sim_start = read_time(j.at("sim_start"));
    s.horizon_s = j.value("horizon_s", s.horizon_s);
    if (s.horizon_s <= 0) throw Error(ErrorCode::kInvalidArgument, "scenario horizon must be positive");
    for (const auto& d : j.value("disruptions", json::array())) {
      Disruption dis;
      for (const auto& id : d.at("blocks").get<std::vector<std::string>>()) {
        auto b = model.find_block(id);
        if (!b) throw Error(ErrorCode::kDanglingReference, "scenario names unknown block " + id);
        dis.blocks.push_back(*b);
      }
      dis.start_s = read_time(d.at("start"));
      dis.duration_s = d.at("duration_s").get<Seconds>();
      if (dis.blocks.empty() || dis.duration_s <= 0) {
        throw Error(ErrorCode::kInvalidArgument, "scenario disruption needs blocks and a positive duration");
      }
      s.disruptions.push_back(std::move(dis));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("scenario: ") + e.what());
  }
  return s;
}

ControllerKind parse_controller(std::string_view name) {
  if (name == "timetable-only") return ControllerKind::kTimetableOnly;
  if (name == "all-proceed") return ControllerKind::kAllProceed;
  if (name == "policy") return ControllerKind::kPolicy;
  throw Error(ErrorCode::kInvalidArgument, "unknown controller '" + std::string(name) + "'");
}

std::string_view to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::kTimetableOnly: return "timetable-only";
    case ControllerKind::kAllProceed: return "all-proceed";
    case ControllerKind::kPolicy: return "policy";
  }
  return "?";
}

// ---------------------------------------------------------------------------

RunRecord run_scenario(std::shared_ptr<const World> world, const Scenario& scenario, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const World& w = *world;
  EpisodeSpec spec;
  spec.start_s = scenario.sim_start;
  spec.horizon_s = options.horizon_s > 0 ? options.horizon_s : scenario.horizon_s;
  spec.disruptions = scenario.disruptions;
  spec.seed = options.seed;
  spec.stochastic_passengers = options.stochastic_passengers;
  spec.timetable_only = options.controller == ControllerKind::kTimetableOnly;

  RunRecord rec;
  rec.controller = std::string(to_string(options.controller));
  rec.seed = options.seed;
  rec.start_s = spec.start_s;
  rec.end_s = spec.start_s + spec.horizon_s;
  rec.line_length = w.geometry().line_length();
  for (std::size_t s = 0; s < w.model().stations().size(); ++s) {
    const auto& st = w.model().stations()[s];
    rec.stations.push_back({st.name.empty() ? st.id : st.name, w.geometry().station_position(static_cast<int>(s))});
  }
  for (const auto& d : scenario.disruptions) {
    DisruptionSpan sp{d.start_s, d.start_s + d.duration_s, w.geometry().line_length(), 0.0};
    for (BlockIndex b : d.blocks) {
      sp.lo = std::min(sp.lo, w.geometry().block_interval(b).lo);
      sp.hi = std::max(sp.hi, w.geometry().block_interval(b).hi);
    }
    rec.spans.push_back(sp);
  }
  rec.world_fingerprint = w.fingerprint();
  rec.scenario_fingerprint = scenario.fingerprint;

  auto sample = [&](const SimState& s) {
    std::vector<double> row(s.trains.size(), kNaN);
    for (std::size_t i = 0; i < s.trains.size(); ++i) {
      if (s.trains[i].in_service()) row[i] = round_mm(train_midpoint(w, s.trains[i]));
    }
    rec.positions.push_back(std::move(row));
  };
  Episode::Observer observer = [&](const SimState& s, const std::vector<Event>& events) {
    rec.events.insert(rec.events.end(), events.begin(), events.end());
    sample(s);
  };

  if (options.controller == ControllerKind::kPolicy) {
    if (!options.policy) throw Error(ErrorCode::kInvalidArgument, "policy controller needs a checkpoint");
    EpisodeConfig cfg;
    if (!scenario.disruptions.empty()) {
      std::vector<std::string> ids;
      for (BlockIndex b : scenario.disruptions.front().blocks) ids.push_back(w.model().block(b).id);
      cfg.location_sets.push_back(ids);
    }
    cfg.horizon_s = spec.horizon_s;
    cfg.decision_interval_s = options.decision_interval_s;
    RailEnv env(world, cfg);
    const PolicyParams& p = *options.policy;
    if (static_cast<std::size_t>(p.obs_dim) != env.observation_size() || p.action_dims != env.action_dims()) {
      throw Error(ErrorCode::kIncompatible,
                  "checkpoint expects " + std::to_string(p.obs_dim) + " observations and " +
                      std::to_string(p.action_dims.size()) + " decision points; scenario has " +
                      std::to_string(env.observation_size()) + " and " + std::to_string(env.action_dims().size()));
    }
    auto obs = env.reset_with(spec);
    for (const auto& t : env.episode().state().trains) rec.trains.push_back(t.name);
    sample(env.episode().state());
    const ActionFn act = policy_action_fn(options.policy, options.greedy);
    std::mt19937_64 rng(action_seed(options.seed));
    while (!env.episode().done()) {
      ActionChoice c = act(obs, rng);
      obs = env.step(c.actions, observer).observation;
    }
    rec.accumulators = env.episode().accumulators();
  } else {
    Episode ep(world, spec);
    for (const auto& t : ep.state().trains) rec.trains.push_back(t.name);
    sample(ep.state());
    while (!ep.done()) ep.advance(3600, observer);
    rec.accumulators = ep.accumulators();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ---------------------------------------------------------------------------

namespace {

EventKind event_kind_from(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(EventKind::kDisruptionEnd); ++k) {
    if (to_string(static_cast<EventKind>(k)) == s) return static_cast<EventKind>(k);
  }
  throw Error(ErrorCode::kParse, "record: unknown event kind '" + s + "'");
}

json accumulators_json(const RunAccumulators& a) {
  return {{"generated", a.generated},
          {"arrived", a.arrived},
          {"arrived_at_start", a.arrived_at_start},
          {"stop_seconds", a.stop_seconds},
          {"stop_events", a.stop_events},
          {"deviation_sum", a.deviation_sum},
          {"deviation_samples", a.deviation_samples},
          {"seconds", a.seconds}};
}

std::uint64_t parse_hex(const std::string& s) {
  try {
    return std::stoull(s, nullptr, 16);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "record: bad fingerprint '" + s + "'");
  }
}

}  // namespace

std::string serialize_record(const RunRecord& r) {
  json stations = json::array();
  for (const auto& s : r.stations) stations.push_back({{"name", s.name}, {"position", s.position}});
  json trains = json::array();
  for (std::size_t i = 0; i < r.trains.size(); ++i) {
    json xs = json::array();
    for (const auto& row : r.positions) {
      if (std::isnan(row[i])) {
        xs.push_back(nullptr);
      } else {
        xs.push_back(row[i]);
      }
    }
    trains.push_back({{"name", r.trains[i]}, {"x", std::move(xs)}});
  }
  json events = json::array();
  for (const auto& e : r.events) {
    events.push_back(json::array({e.t, std::string(to_string(e.kind)), e.train, e.station, e.block, e.detail}));
  }
  json spans = json::array();
  for (const auto& s : r.spans) spans.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"lo", s.lo}, {"hi", s.hi}});
  json j = {{"format", "railsim-record"},
            {"version", 1},
            {"controller", r.controller},
            {"seed", r.seed},
            {"start_s", r.start_s},
            {"end_s", r.end_s},
            {"line_length", r.line_length},
            {"stations", stations},
            {"trains", trains},
            {"events", events},
            {"spans", spans},
            {"accumulators", accumulators_json(r.accumulators)},
            {"world_fingerprint", hex64(r.world_fingerprint)},
            {"scenario_fingerprint", hex64(r.scenario_fingerprint)},
            {"wall_ms", r.wall_ms}};
  return j.dump() + "\n";
}

RunRecord parse_record(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("record: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "railsim-record") throw Error(ErrorCode::kParse, "not a run record");
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::kIncompatible, "unsupported record version");
    RunRecord r;
    r.controller = j.at("controller").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.start_s = j.at("start_s").get<Seconds>();
    r.end_s = j.at("end_s").get<Seconds>();
    r.line_length = j.at("line_length").get<double>();
    for (const auto& s : j.at("stations")) r.stations.push_back({s.at("name"), s.at("position")});
    const auto& trains = j.at("trains");
    std::size_t samples = 0;
    for (const auto& t : trains) {
      r.trains.push_back(t.at("name").get<std::string>());
      samples = std::max(samples, t.at("x").size());
    }
    r.positions.assign(samples, std::vector<double>(trains.size(), kNaN));
    for (std::size_t i = 0; i < trains.size(); ++i) {
      const auto& xs = trains[i].at("x");
      if (xs.size() != samples) throw Error(ErrorCode::kParse, "record: position series differ in length");
      for (std::size_t k = 0; k < samples; ++k) {
        if (!xs[k].is_null()) r.positions[k][i] = xs[k].get<double>();
      }
    }
    for (const auto& e : j.at("events")) {
      r.events.push_back({e.at(0).get<Seconds>(), event_kind_from(e.at(1).get<std::string>()), e.at(2).get<int>(),
                          e.at(3).get<int>(), e.at(4).get<BlockIndex>(), e.at(5).get<std::string>()});
    }
    for (const auto& s : j.at("spans")) {
      r.spans.push_back({s.at("start_s"), s.at("end_s"), s.at("lo"), s.at("hi")});
    }
    const auto& a = j.at("accumulators");
    r.accumulators.generated = a.at("generated");
    r.accumulators.arrived = a.at("arrived");
    r.accumulators.arrived_at_start = a.at("arrived_at_start");
    r.accumulators.stop_seconds = a.at("stop_seconds");
    r.accumulators.stop_events = a.at("stop_events");
    r.accumulators.deviation_sum = a.at("deviation_sum");
    r.accumulators.deviation_samples = a.at("deviation_samples");
    r.accumulators.seconds = a.at("seconds");
    r.world_fingerprint = parse_hex(j.at("world_fingerprint").get<std::string>());
    r.scenario_fingerprint = parse_hex(j.at("scenario_fingerprint").get<std::string>());
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Metrics compute_metrics(const RunRecord& r) {
  Metrics m;
  m.arrived = r.accumulators.arrived - r.accumulators.arrived_at_start;
  if (r.accumulators.deviation_samples > 0) {
    m.mean_deviation = r.accumulators.deviation_sum / static_cast<double>(r.accumulators.deviation_samples);
  }
  std::map<int, Seconds> open;
  for (const auto& e : r.events) {
    if (e.kind == EventKind::kStopBetweenStationsBegin) {
      ++m.stop_events;
      open[e.train] = e.t;
    } else if (e.kind == EventKind::kStopBetweenStationsEnd) {
      auto it = open.find(e.train);
      if (it != open.end()) {
        m.stop_seconds += static_cast<double>(e.t - it->second);
        open.erase(it);
      }
    }
  }
  for (const auto& [train, since] : open) m.stop_seconds += static_cast<double>(std::max<Seconds>(0, r.end_s - since));

  const double hours = static_cast<double>(r.end_s - r.start_s) / 3600.0;
  for (std::size_t s = 0; s + 1 < r.stations.size(); ++s) {
    SegmentRate seg{r.stations[s].name, r.stations[s + 1].name, 0.0, 0.0};
    const double mid = 0.5 * (r.stations[s].position + r.stations[s + 1].position);
    int up = 0;
    int down = 0;
    for (std::size_t k = 1; k < r.positions.size(); ++k) {
      for (std::size_t i = 0; i < r.trains.size(); ++i) {
        const double a = r.positions[k - 1][i];
        const double b = r.positions[k][i];
        if (std::isnan(a) || std::isnan(b)) continue;
        if (a < mid && b >= mid) ++up;
        if (a >= mid && b < mid) ++down;
      }
    }
    if (hours > 0.0) {
      seg.up_per_hour = up / hours;
      seg.down_per_hour = down / hours;
    }
    m.trains_per_hour.push_back(seg);
  }
  return m;
}

std::string metrics_json(const Metrics& m) {
  json segs = json::array();
  for (const auto& s : m.trains_per_hour) {
    segs.push_back({{"from", s.from}, {"to", s.to}, {"up_per_hour", s.up_per_hour}, {"down_per_hour", s.down_per_hour}});
  }
  json j = {{"arrived", m.arrived},
            {"stop_seconds", m.stop_seconds},
            {"stop_events", m.stop_events},
            {"mean_deviation", m.mean_deviation},
            {"trains_per_hour", segs}};
  return j.dump();
}

// ---------------------------------------------------------------------------

double percent_delta(double b, double c) {
  if (b == 0.0) return c == 0.0 ? 0.0 : (c > 0.0 ? 100.0 : -100.0);
  return (c - b) / std::abs(b) * 100.0;
}

CompareReport compare(const RunRecord& baseline, const RunRecord& candidate) {
  if (baseline.world_fingerprint != candidate.world_fingerprint) {
    throw Error(ErrorCode::kIncompatible, "records come from different route/timetable/OD inputs");
  }
  if (baseline.scenario_fingerprint != candidate.scenario_fingerprint) {
    throw Error(ErrorCode::kIncompatible, "records come from different scenarios");
  }
  CompareReport c;
  c.baseline = compute_metrics(baseline);
  c.candidate = compute_metrics(candidate);
  c.stop_seconds_delta_pct = percent_delta(c.baseline.stop_seconds, c.candidate.stop_seconds);
  c.stop_events_delta_pct = percent_delta(static_cast<double>(c.baseline.stop_events),
                                          static_cast<double>(c.candidate.stop_events));
  c.arrived_delta_pct = percent_delta(static_cast<double>(c.baseline.arrived), static_cast<double>(c.candidate.arrived));
  c.deviation_delta_pct = percent_delta(c.baseline.mean_deviation, c.candidate.mean_deviation);
  return c;
}

std::string compare_json(const CompareReport& c) {
  json j = {{"baseline", json::parse(metrics_json(c.baseline))},
            {"candidate", json::parse(metrics_json(c.candidate))},
            {"delta_pct",
             {{"stop_seconds", c.stop_seconds_delta_pct},
              {"stop_events", c.stop_events_delta_pct},
              {"arrived", c.arrived_delta_pct},
              {"mean_deviation", c.deviation_delta_pct}}}};
  return j.dump(2) + "\n";
}

std::string compare_table(const CompareReport& c) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %14s %14s %10s\n", "metric", "baseline", "candidate", "delta %");
  out += buf;
  auto row = [&](const char* name, double b, double v, double d) {
    std::snprintf(buf, sizeof buf, "%-22s %14.1f %14.1f %+10.1f\n", name, b, v, d);
    out += buf;
  };
  row("stop time [train-s]", c.baseline.stop_seconds, c.candidate.stop_seconds, c.stop_seconds_delta_pct);
  row("stop events", static_cast<double>(c.baseline.stop_events), static_cast<double>(c.candidate.stop_events),
      c.stop_events_delta_pct);
  row("arrived passengers", static_cast<double>(c.baseline.arrived), static_cast<double>(c.candidate.arrived),
      c.arrived_delta_pct);
  row("mean deviation", c.baseline.mean_deviation, c.candidate.mean_deviation, c.deviation_delta_pct);
  return out;
}

}  // namespace railsim
