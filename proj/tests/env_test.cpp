#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "railsim/env.hpp"
#include "railsim/error.hpp"
#include "railsim/io.hpp"
#include "support.hpp"

using namespace railsim;

namespace {

EpisodeConfig toy_config() { return load_episode_config(testing::fixture("episode_toy.json")); }

EpisodeConfig quiet_config() {
  EpisodeConfig c = toy_config();
  c.location_sets.clear();
  return c;
}

Disruption blocks_of(const RouteModel& m, std::initializer_list<const char*> ids, Seconds start, Seconds dur) {
  Disruption d;
  for (const char* id : ids) d.blocks.push_back(*m.find_block(id));
  d.start_s = start;
  d.duration_s = dur;
  return d;
}

}  // namespace

TEST_CASE("reward arithmetic") {
  TransitionAggregates a;
  a.arrived = 10;
  a.stop_seconds = 30;
  a.deviation = 4;
  const RewardWeights w{1.0, 0.0, 0.01, 0.0, 0.1};
  CHECK(compute_reward(a, w) == doctest::Approx(9.3).epsilon(1e-12));
  CHECK(compute_reward(TransitionAggregates{}, w) == 0.0);
  CHECK(compute_reward(a, RewardWeights{0, 0, 0, 0, 0}) == 0.0);
}

TEST_CASE("reward is linear in the weights") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const TransitionAggregates a{pos(rng), pos(rng), pos(rng), pos(rng), pos(rng)};
    const RewardWeights w{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const double alpha = u(rng);
    const RewardWeights aw{alpha * w.w_arrived, alpha * w.w_speed, alpha * w.w_stoppage, alpha * w.w_congestion,
                           alpha * w.w_deviation};
    CHECK(compute_reward(a, aw) == doctest::Approx(alpha * compute_reward(a, w)).epsilon(1e-9));
  }
}

TEST_CASE("presets") {
  CHECK(reward_preset("experiment") == RewardWeights{1.0, 0.0, 0.01, 0.0, 0.0});
  CHECK(reward_preset("recovery").w_deviation > 0.0);
  CHECK_THROWS_AS(reward_preset("nope"), Error);
}

TEST_CASE("degenerate ranges always give the same scenario") {
  const auto cfg = toy_config();
  const auto& m = testing::desk_world()->model();
  std::mt19937_64 rng(1);
  const DomainSample first = randomize_domain(cfg, m, rng);
  for (int i = 0; i < 50; ++i) {
    const DomainSample d = randomize_domain(cfg, m, rng);
    CHECK(d.disruption == first.disruption);
    CHECK(d.sim_start == first.sim_start);
  }
  CHECK(first.disruption.start_s == parse_hms("08:00:00"));
  CHECK(first.disruption.duration_s == 1800);
}

TEST_CASE("randomization is seeded") {
  EpisodeConfig cfg = toy_config();
  cfg.sim_start_window = {parse_hms("06:00:00"), parse_hms("09:00:00")};
  cfg.disruption_start_window = {parse_hms("07:00:00"), parse_hms("10:00:00")};
  cfg.duration_range = {600, 3600};
  const auto& m = testing::desk_world()->model();
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    const auto x = randomize_domain(cfg, m, a);
    const auto y = randomize_domain(cfg, m, b);
    CHECK(x.disruption == y.disruption);
    CHECK(x.sim_start == y.sim_start);
    CHECK(x.disruption.duration_s >= 600);
    CHECK(x.disruption.duration_s <= 3600);
  }
  cfg.duration_range = {600, 500};
  CHECK_THROWS_AS(randomize_domain(cfg, m, a), Error);
  cfg = toy_config();
  cfg.location_sets.clear();
  CHECK_THROWS_AS(randomize_domain(cfg, m, a), Error);
}

TEST_CASE("location frequencies") {
  EpisodeConfig cfg = toy_config();
  const auto& m = testing::desk_world()->model();
  cfg.location_sets.clear();
  for (const char* id : {"U01_1", "U01_2", "U12_1", "U12_2", "U23_1", "U23_2", "U34_1", "U34_2", "U45_1", "U45_2"}) {
    cfg.location_sets.push_back({id});
  }
  std::map<BlockIndex, int> counts;
  std::mt19937_64 rng(2024);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[randomize_domain(cfg, m, rng).disruption.blocks.front()];
  REQUIRE(counts.size() == 10);
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  for (const auto& [b, c] : counts) CHECK(std::abs(c - 1000.0) <= 3.0 * sigma);
}

TEST_CASE("reset without disruption") {
  RailEnv env(testing::desk_world(), quiet_config());
  CHECK(env.action_dims().empty());
  const auto obs = env.reset(3);
  CHECK(obs.size() == env.observation_size());
  CHECK(obs.size() == 6);
  CHECK_FALSE(env.episode().assignment().any_rl());
  CHECK(obs[0] == 0.0);
}

TEST_CASE("reset with a disruption reports it") {
  const auto w = testing::desk_world();
  const auto& m = w->model();
  RailEnv env(w, toy_config());
  EpisodeSpec spec;
  spec.start_s = parse_hms("08:00:00");
  spec.horizon_s = 600;
  spec.disruptions.push_back(blocks_of(m, {"U67_1", "U67_2", "U67_3", "D76_1", "D76_2", "D76_3"}, spec.start_s, 1800));
  const auto obs = env.reset_with(spec);
  REQUIRE(obs.size() == env.observation_size());
  const std::size_t g = obs.size() - 6;
  CHECK(obs[g] == 1.0);
  double lo = 1e300, hi = -1e300;
  for (BlockIndex b : spec.disruptions[0].blocks) {
    lo = std::min(lo, w->geometry().block_interval(b).lo);
    hi = std::max(hi, w->geometry().block_interval(b).hi);
  }
  CHECK(obs[g + 1] == doctest::Approx(0.5 * (lo + hi) / w->geometry().line_length()));
  for (double x : obs) {
    CHECK(std::isfinite(x));
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("same seed, same observations") {
  RailEnv a(testing::desk_world(), toy_config());
  RailEnv b(testing::desk_world(), toy_config());
  CHECK(a.reset(42) == b.reset(42));
  const std::vector<int> act(a.action_dims().size(), 5);
  for (int i = 0; i < 20; ++i) {
    const auto x = a.step(act);
    const auto y = b.step(act);
    CHECK(x.observation == y.observation);
    CHECK(x.reward == y.reward);
  }
}

TEST_CASE("disruption flag follows the active interval") {
  const auto w = testing::desk_world();
  const auto cfg = toy_config();
  RailEnv env(w, cfg);
  env.reset(1);
  const Disruption d = env.episode().state().disruptions.front();
  const std::vector<int> act(env.action_dims().size(), 0);
  while (true) {
    auto r = env.step(act);
    const Seconds t = r.info.clock;
    CHECK(r.observation[r.observation.size() - 6] == (d.active_at(t) ? 1.0 : 0.0));
    CHECK(r.observation.size() == env.observation_size());
    if (r.done) {
      CHECK(t >= env.episode().end_s());
      break;
    }
  }
}

TEST_CASE("wrong action count") {
  RailEnv env(testing::desk_world(), toy_config());
  env.reset(1);
  const std::vector<int> too_many(env.action_dims().size() + 1, 0);
  CHECK_THROWS_AS(env.step(too_many), Error);
  const std::vector<int> out_of_range(env.action_dims().size(), kMacroChoices);
  CHECK_THROWS_AS(env.step(out_of_range), Error);
}

TEST_CASE("all-proceed without an active disruption matches the timetable") {
  const auto w = testing::desk_world();
  const auto& m = w->model();
  EpisodeSpec spec;
  spec.start_s = parse_hms("07:00:00");
  spec.horizon_s = 3600;
  spec.seed = 4;
  // assigns the span but never becomes active inside the horizon
  spec.disruptions.push_back(blocks_of(m, {"U34_1", "D43_1"}, spec.start_s + 2 * spec.horizon_s, 600));
  EpisodeConfig cfg = toy_config();
  cfg.location_sets = {{"U34_1", "D43_1"}};
  RailEnv env(w, cfg);
  env.reset_with(spec);
  REQUIRE(env.episode().assignment().any_rl());
  const std::vector<int> proceed(env.action_dims().size(), 0);
  double total = 0.0;
  std::vector<Event> rl_events;
  while (true) {
    auto r = env.step(proceed, [&](const SimState&, const std::vector<Event>& ev) {
      rl_events.insert(rl_events.end(), ev.begin(), ev.end());
    });
    total += r.reward;
    if (r.done) break;
  }

  EpisodeSpec base = spec;
  base.timetable_only = true;
  Episode ep(w, base);
  double base_total = 0.0;
  std::vector<Event> base_events;
  while (!ep.done()) {
    base_total += compute_reward(ep.advance(cfg.decision_interval_s, [&](const SimState&, const std::vector<Event>& ev) {
      base_events.insert(base_events.end(), ev.begin(), ev.end());
    }), cfg.weights);
  }
  CHECK(total == base_total);
  auto movements = [](const std::vector<Event>& ev) {
    std::vector<std::tuple<Seconds, int, int>> out;
    for (const auto& e : ev) {
      if (e.kind == EventKind::kArrive || e.kind == EventKind::kDepart) out.emplace_back(e.t, e.train, e.station);
    }
    return out;
  };
  CHECK(movements(rl_events) == movements(base_events));
}

TEST_CASE("deviation is zero on the undisrupted timetable") {
  const auto w = testing::desk_world();
  EpisodeSpec spec;
  spec.start_s = w->service_start();
  spec.horizon_s = 4 * 3600;
  spec.timetable_only = true;
  Episode ep(w, spec);
  double worst = 0.0;
  ep.advance(spec.horizon_s, [&](const SimState& s, const std::vector<Event>&) {
    worst = std::max(worst, w->deviation(s));
  });
  CHECK(worst == 0.0);
  CHECK(ep.accumulators().deviation_sum == 0.0);
}
