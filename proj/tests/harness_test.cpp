#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "railsim/error.hpp"
#include "railsim/harness.hpp"
#include "railsim/io.hpp"
#include "railsim/rollout.hpp"
#include "support.hpp"

using namespace railsim;

namespace {

RunRecord two_station_record() {
  RunRecord r;
  r.controller = "timetable";
  r.start_s = 1000;
  r.end_s = 1100;
  r.line_length = 1000.0;
  r.stations = {{"A", 0.0}, {"B", 1000.0}};
  r.trains = {"T1", "T2"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k <= 100; ++k) r.positions.push_back({500.0, k < 50 ? nan : 10.0 * (k - 50)});
  return r;
}

Event ev(Seconds t, EventKind k, int train) {
  Event e;
  e.t = t;
  e.kind = k;
  e.train = train;
  return e;
}

Scenario scenario(const char* name) {
  return parse_scenario(read_file(testing::fixture(name)), testing::desk_world()->model());
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("an empty run has zero metrics") {
  RunRecord r;
  const Metrics m = compute_metrics(r);
  CHECK(m.arrived == 0);
  CHECK(m.stop_seconds == 0.0);
  CHECK(m.stop_events == 0);
  CHECK(m.mean_deviation == 0.0);
  CHECK(m.trains_per_hour.empty());
}

TEST_CASE("metrics from three events") {
  RunRecord r = two_station_record();
  r.events = {ev(1005, EventKind::kStopBetweenStationsBegin, 0), ev(1020, EventKind::kStopBetweenStationsEnd, 0),
              ev(1050, EventKind::kStopBetweenStationsBegin, 1)};
  r.accumulators.arrived = 40;
  r.accumulators.arrived_at_start = 15;
  const Metrics m = compute_metrics(r);
  CHECK(m.stop_events == 2);
  CHECK(m.stop_seconds == 15.0 + 50.0);
  CHECK(m.arrived == 25);
  REQUIRE(m.trains_per_hour.size() == 1);
  // T2 crosses the midpoint once going up during a 100 s window
  CHECK(m.trains_per_hour[0].up_per_hour == doctest::Approx(36.0));
  CHECK(m.trains_per_hour[0].down_per_hour == 0.0);
}

TEST_CASE("metrics ignore event order within a second") {
  RunRecord r = two_station_record();
  r.events = {ev(1005, EventKind::kStopBetweenStationsBegin, 0), ev(1005, EventKind::kStopBetweenStationsBegin, 1),
              ev(1020, EventKind::kStopBetweenStationsEnd, 0),   ev(1020, EventKind::kArrive, 1),
              ev(1030, EventKind::kStopBetweenStationsEnd, 1),   ev(1030, EventKind::kStopBetweenStationsBegin, 0)};
  const std::string base = metrics_json(compute_metrics(r));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    // shuffle only inside runs of equal timestamps
    for (auto lo = r.events.begin(); lo != r.events.end();) {
      auto hi = std::find_if(lo, r.events.end(), [&](const Event& e) { return e.t != lo->t; });
      std::shuffle(lo, hi, rng);
      lo = hi;
    }
    CHECK(metrics_json(compute_metrics(r)) == base);
  }
}

TEST_CASE("a stationary train is one horizontal line") {
  RunRecord r = two_station_record();
  r.trains = {"T1"};
  for (auto& p : r.positions) p.resize(1);
  const std::string svg = render_time_space_svg(r);
  CHECK(count_of(svg, "<polyline") == 1);
  const auto at = svg.find("points=\"");
  REQUIRE(at != std::string::npos);
  const std::string pts = svg.substr(at + 8, svg.find('"', at + 8) - at - 8);
  std::istringstream in(pts);
  std::string pair;
  std::set<std::string> ys;
  int n = 0;
  while (in >> pair) {
    ys.insert(pair.substr(pair.find(',') + 1));
    ++n;
  }
  CHECK(n >= 2);
  CHECK(ys.size() == 1);
  CHECK(count_of(svg, "class=\"disruption\"") == 0);
}

TEST_CASE("one disruption, one shaded rectangle") {
  RunRecord r = two_station_record();
  r.spans = {{1020, 1080, 300.0, 600.0}};
  const std::string a = render_time_space_svg(r);
  CHECK(count_of(a, "class=\"disruption\"") == 1);
  CHECK(render_time_space_svg(r) == a);
}

TEST_CASE("compare") {
  RunRecord r = two_station_record();
  r.events = {ev(1005, EventKind::kStopBetweenStationsBegin, 0), ev(1020, EventKind::kStopBetweenStationsEnd, 0)};
  r.accumulators.arrived = 10;
  const CompareReport same = compare(r, r);
  CHECK(same.stop_seconds_delta_pct == 0.0);
  CHECK(same.stop_events_delta_pct == 0.0);
  CHECK(same.arrived_delta_pct == 0.0);
  CHECK(same.deviation_delta_pct == 0.0);
  RunRecord other = r;
  other.scenario_fingerprint = r.scenario_fingerprint + 1;
  try {
    compare(r, other);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIncompatible);
  }
  CHECK(percent_delta(0, 0) == 0.0);
  CHECK(percent_delta(0, 5) == 100.0);
  CHECK(percent_delta(200, 100) == -50.0);
}

TEST_CASE("timetable-only midline run") {
  const auto w = testing::desk_world();
  const Scenario sc = scenario("scenario_midline.json");
  RunOptions opt;
  opt.seed = 1;
  const RunRecord r = run_scenario(w, sc, opt);
  const Metrics m = compute_metrics(r);
  CHECK(m.stop_events > 0);
  CHECK(m.stop_seconds > 0.0);
  REQUIRE(r.spans.size() == 1);
  CHECK(count_of(render_time_space_svg(r), "class=\"disruption\"") == 1);

  SUBCASE("record round trip") {
    const RunRecord back = parse_record(serialize_record(r));
    CHECK(serialize_record(back) == serialize_record(r));
    CHECK(metrics_json(compute_metrics(back)) == metrics_json(m));
    CHECK(render_time_space_svg(back) == render_time_space_svg(r));
  }

  SUBCASE("trains only turn around when they reverse") {
    for (std::size_t i = 0; i < r.trains.size(); ++i) {
      int sign = 0;
      Seconds last_move = r.start_s;
      for (std::size_t k = 1; k < r.positions.size(); ++k) {
        const double a = r.positions[k - 1][i];
        const double b = r.positions[k][i];
        if (std::isnan(a) || std::isnan(b)) {
          sign = 0;
          continue;
        }
        const double d = b - a;
        if (std::abs(d) < 1e-9) continue;
        const int now = d > 0 ? 1 : -1;
        const Seconds t = r.start_s + static_cast<Seconds>(k);
        if (sign != 0 && now != sign) {
          const bool reversed = std::any_of(r.events.begin(), r.events.end(), [&](const Event& e) {
            return e.kind == EventKind::kReverse && e.train == static_cast<int>(i) && e.t >= last_move && e.t <= t;
          });
          INFO("train " << r.trains[i] << " at " << t);
          CHECK(reversed);
        }
        sign = now;
        last_move = t;
      }
    }
  }
}

TEST_CASE("runs are byte-identical") {
  const auto w = testing::desk_world();
  const Scenario sc = scenario("scenario_midline.json");
  RunOptions opt;
  opt.seed = 9;
  opt.controller = ControllerKind::kAllProceed;
  const RunRecord a = run_scenario(w, sc, opt);
  const RunRecord b = run_scenario(w, sc, opt);
  CHECK(metrics_json(compute_metrics(a)) == metrics_json(compute_metrics(b)));
  CHECK(render_time_space_svg(a) == render_time_space_svg(b));
  CHECK(a.events == b.events);
  CHECK(a.spans == b.spans);
}

TEST_CASE("controller names") {
  CHECK(parse_controller("timetable-only") == ControllerKind::kTimetableOnly);
  CHECK(parse_controller(to_string(ControllerKind::kPolicy)) == ControllerKind::kPolicy);
  CHECK(parse_controller(to_string(ControllerKind::kAllProceed)) == ControllerKind::kAllProceed);
  CHECK_THROWS_AS(parse_controller("bogus"), Error);
  RunOptions opt;
  opt.controller = ControllerKind::kPolicy;
  CHECK_THROWS_AS(run_scenario(testing::desk_world(), scenario("scenario_toy.json"), opt), Error);
}

TEST_CASE("scenario parsing") {
  const auto& m = testing::desk_world()->model();
  const Scenario s = parse_scenario(
      R"({"sim_start": "07:00:00", "horizon_s": 600,
          "disruptions": [{"blocks": ["U34_1"], "start": 25500, "duration_s": 60}]})",
      m);
  CHECK(s.sim_start == 25200);
  CHECK(s.horizon_s == 600);
  REQUIRE(s.disruptions.size() == 1);
  CHECK(s.disruptions[0].start_s == 25500);
  CHECK_THROWS_AS(parse_scenario(R"({"sim_start": 0, "horizon_s": 10, "disruptions": [{"blocks": ["NOPE"],
      "start": 0, "duration_s": 1}]})",
                                 m),
                  Error);
}

// ---------------------------------------------------------------------------

namespace {

ActionFn uniform_random() {
  return [](std::span<const double>, std::mt19937_64& rng) {
    ActionChoice c;
    c.actions.push_back(static_cast<int>(rng() % kMacroChoices));
    c.log_prob = -std::log(static_cast<double>(kMacroChoices));
    return c;
  };
}

}  // namespace

TEST_CASE("parallel rollouts equal sequential ones") {
  const auto w = testing::desk_world();
  auto cfg = load_episode_config(testing::fixture("episode_toy.json"));
  cfg.stochastic_passengers = true;
  const std::vector<std::uint64_t> seeds{3, 1, 4, 1, 5};
  const auto seq = vector_rollout(w, cfg, seeds, uniform_random(), 8, 1);
  const auto par = vector_rollout(w, cfg, seeds, uniform_random(), 8, 4);
  REQUIRE(seq.size() == seeds.size());
  CHECK(seq == par);
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(seq[i].seed == seeds[i]);
  CHECK(seq[1] == seq[3]);

  std::ostringstream a, b;
  write_trajectories(a, seq);
  write_trajectories(b, par);
  const std::string dump = a.str();
  CHECK(dump == b.str());
  CHECK(std::count(dump.begin(), dump.end(), '\n') == 5 * 8);
}

TEST_CASE("a single rollout equals stepping the environment by hand") {
  const auto w = testing::desk_world();
  const auto cfg = load_episode_config(testing::fixture("episode_toy.json"));
  const std::uint64_t seed = 17;
  const std::vector<std::uint64_t> seeds{seed};
  const auto tr = vector_rollout(w, cfg, seeds, uniform_random(), 1000, 1).front();

  RailEnv env(w, cfg);
  std::mt19937_64 rng(action_seed(seed));
  auto obs = env.reset(seed);
  std::vector<double> rewards;
  std::vector<std::vector<double>> observations;
  const auto act = uniform_random();
  while (true) {
    const auto c = act(obs, rng);
    observations.push_back(obs);
    auto r = env.step(c.actions);
    rewards.push_back(r.reward);
    obs = r.observation;
    if (r.done) break;
  }
  CHECK(tr.rewards == rewards);
  CHECK(tr.observations == observations);
  CHECK(tr.dones.back() == 1);
  CHECK(tr.bootstrap_value == 0.0);
}
