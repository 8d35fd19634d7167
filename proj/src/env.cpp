#include "railsim/env.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include <json.hpp>

#include "railsim/error.hpp"
#include "railsim/io.hpp"

namespace railsim {

using nlohmann::json;

RewardWeights reward_preset(std::string_view name) {
  if (name == "experiment") return {1.0, 0.0, 0.01, 0.0, 0.0};
  if (name == "recovery") return {1.0, 0.0, 0.01, 0.0, 0.05};
  throw Error(ErrorCode::kInvalidArgument, "unknown reward preset '" + std::string(name) + "'");
}

double compute_reward(const TransitionAggregates& a, const RewardWeights& w) {
  return w.w_arrived * a.arrived + w.w_speed * a.mean_speed - w.w_stoppage * a.stop_seconds -
         w.w_congestion * a.excess_load - w.w_deviation * a.deviation;
}

namespace {

Seconds read_time(const json& j) {
  if (j.is_number_integer()) return j.get<Seconds>();
  if (j.is_string()) return parse_hms(j.get<std::string>());
  throw Error(ErrorCode::kParse, "expected seconds or \"HH:MM:SS\"");
}

std::array<Seconds, 2> read_window(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kParse, std::string(what) + " must be a pair");
  return {read_time(j[0]), read_time(j[1])};
}

std::string resolve(const std::string& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

EpisodeConfig parse_episode_config(std::string_view text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("episode config: ") + e.what());
  }
  try {
    EpisodeConfig c;
    c.route_path = resolve(base_dir, j.at("route").get<std::string>());
    c.timetable_path = resolve(base_dir, j.at("timetable").get<std::string>());
    c.od_path = resolve(base_dir, j.at("od").get<std::string>());
    c.sim_start_window = read_window(j.at("sim_start_window"), "sim_start_window");
    if (j.contains("disruption")) {
      const auto& d = j.at("disruption");
      c.location_sets = d.at("location_sets").get<std::vector<std::vector<std::string>>>();
      c.disruption_start_window = read_window(d.at("start_window"), "start_window");
      c.duration_range = read_window(d.at("duration_range_s"), "duration_range_s");
    }
    c.horizon_s = j.value("horizon_s", c.horizon_s);
    c.decision_interval_s = j.value("decision_interval_s", c.decision_interval_s);
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      if (w.is_string()) {
        c.weights = reward_preset(w.get<std::string>());
      } else {
        c.weights.w_arrived = w.value("arrived", 0.0);
        c.weights.w_speed = w.value("speed", 0.0);
        c.weights.w_stoppage = w.value("stoppage", 0.0);
        c.weights.w_congestion = w.value("congestion", 0.0);
        c.weights.w_deviation = w.value("deviation", 0.0);
      }
    }
    c.seed = j.value("seed", c.seed);
    c.stochastic_passengers = j.value("stochastic_passengers", c.stochastic_passengers);
    if (c.horizon_s <= 0 || c.decision_interval_s <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "episode config: horizon and decision interval must be positive");
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("episode config: ") + e.what());
  }
}

EpisodeConfig load_episode_config(const std::string& path) {
  return parse_episode_config(read_file(path), std::filesystem::path(path).parent_path().string());
}

DomainSample randomize_domain(const EpisodeConfig& cfg, const RouteModel& model, std::mt19937_64& rng) {
  auto check = [](const std::array<Seconds, 2>& r, const char* what) {
    if (r[0] > r[1]) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " range is empty");
  };
  check(cfg.sim_start_window, "sim start");
  check(cfg.disruption_start_window, "disruption start");
  check(cfg.duration_range, "duration");
  if (cfg.location_sets.empty()) throw Error(ErrorCode::kInvalidArgument, "no disruption location candidates");
  if (cfg.duration_range[0] <= 0) throw Error(ErrorCode::kInvalidArgument, "disruption duration must be positive");

  DomainSample out;
  std::uniform_int_distribution<std::size_t> pick(0, cfg.location_sets.size() - 1);
  std::uniform_int_distribution<Seconds> start(cfg.disruption_start_window[0], cfg.disruption_start_window[1]);
  std::uniform_int_distribution<Seconds> duration(cfg.duration_range[0], cfg.duration_range[1]);
  std::uniform_int_distribution<Seconds> sim_start(cfg.sim_start_window[0], cfg.sim_start_window[1]);
  const auto& names = cfg.location_sets[pick(rng)];
  if (names.empty()) throw Error(ErrorCode::kInvalidArgument, "empty disruption location candidate");
  for (const auto& id : names) {
    auto b = model.find_block(id);
    if (!b) throw Error(ErrorCode::kDanglingReference, "disruption names unknown block " + id);
    out.disruption.blocks.push_back(*b);
  }
  out.disruption.start_s = start(rng);
  out.disruption.duration_s = duration(rng);
  out.sim_start = sim_start(rng);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kPerDecisionPoint = 4;
constexpr std::size_t kPerBlock = 2;
constexpr std::size_t kGlobal = 6;

}  // namespace

RailEnv::RailEnv(std::shared_ptr<const World> world, EpisodeConfig cfg)
    : world_(std::move(world)), cfg_(std::move(cfg)) {
  std::vector<Disruption> probe;
  if (!cfg_.location_sets.empty()) {
    Disruption d;
    for (const auto& id : cfg_.location_sets.front()) {
      auto b = world_->model().find_block(id);
      if (!b) throw Error(ErrorCode::kDanglingReference, "disruption names unknown block " + id);
      d.blocks.push_back(*b);
    }
    d.duration_s = 1;
    probe.push_back(d);
  }
  const ControlAssignment a = assign_control(world_->model(), world_->geometry(), probe);
  decision_points_ = a.decision_points.size();
  obs_size_ = decision_points_ * kPerDecisionPoint + a.span_blocks.size() * kPerBlock + kGlobal;
}

std::vector<int> RailEnv::action_dims() const { return std::vector<int>(decision_points_, kMacroChoices); }

std::size_t RailEnv::raw_control_points() const { return world_->model().control_points().size(); }

std::vector<double> RailEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EpisodeSpec spec;
  spec.seed = seed;
  spec.stochastic_passengers = cfg_.stochastic_passengers;
  spec.horizon_s = cfg_.horizon_s;
  if (cfg_.location_sets.empty()) {
    std::uniform_int_distribution<Seconds> start(cfg_.sim_start_window[0], cfg_.sim_start_window[1]);
    spec.start_s = start(rng);
  } else {
    DomainSample sample = randomize_domain(cfg_, world_->model(), rng);
    spec.start_s = sample.sim_start;
    spec.disruptions.push_back(std::move(sample.disruption));
  }
  return reset_with(spec);
}

std::vector<double> RailEnv::reset_with(const EpisodeSpec& spec) {
  episode_ = std::make_unique<Episode>(world_, spec);
  const auto& a = episode_->assignment();
  const std::size_t size = a.decision_points.size() * kPerDecisionPoint + a.span_blocks.size() * kPerBlock + kGlobal;
  if (size != obs_size_ || a.decision_points.size() != decision_points_) {
    throw Error(ErrorCode::kIncompatible, "scenario changes the observation or action shape of this environment");
  }
  pending_refusals_.clear();
  return observe();
}

StepResult RailEnv::step(std::span<const int> actions, const Episode::Observer& observer) {
  if (!episode_) throw Error(ErrorCode::kInvalidArgument, "step before reset");
  if (actions.size() != decision_points_) {
    throw Error(ErrorCode::kInvalidArgument, "expected " + std::to_string(decision_points_) + " actions, got " +
                                                 std::to_string(actions.size()));
  }
  StepResult r;
  if (!episode_->done()) {
    episode_->latch(actions);
    r.info.aggregates = episode_->advance(cfg_.decision_interval_s, observer);
  }
  r.info.refusals = episode_->take_refusals();
  r.info.clock = episode_->state().clock;
  r.reward = compute_reward(r.info.aggregates, cfg_.weights);
  r.done = episode_->done();
  r.observation = observe();
  return r;
}

std::vector<double> RailEnv::observe() const {
  const Episode& ep = *episode_;
  const SimState& s = ep.state();
  const World& w = *world_;
  const auto& a = ep.assignment();
  std::vector<double> obs;
  obs.reserve(obs_size_);
  for (std::size_t i = 0; i < a.decision_points.size(); ++i) {
    const auto& dp = a.decision_points[i];
    const Seconds standing = ep.standing_time(i);
    const int owner = s.block_owner[static_cast<std::size_t>(dp.platform)];
    const auto& queue = s.passengers.stations[static_cast<std::size_t>(dp.station)];
    const int cap = w.model().stations()[static_cast<std::size_t>(dp.station)].capacity;
    int waiting = 0;
    for (const auto& g : queue.platform[index_of(dp.direction)]) waiting += g.count;
    obs.push_back(standing >= 0 ? 1.0 : 0.0);
    obs.push_back(standing >= 0 ? std::min(1.0, static_cast<double>(standing) / 1800.0) : 0.0);
    obs.push_back(cap > 0 ? std::min(1.0, static_cast<double>(waiting) / cap) : 0.0);
    double load = 0.0;
    if (owner >= 0) {
      const auto& t = s.trains[static_cast<std::size_t>(owner)];
      load = std::min(1.0, congestion(onboard_count(t.onboard), t.capacity));
    }
    obs.push_back(load);
  }
  for (BlockIndex b : a.span_blocks) {
    obs.push_back(s.block_owner[static_cast<std::size_t>(b)] >= 0 ? 1.0 : 0.0);
    obs.push_back(w.sim().block_disrupted(s, b) ? 1.0 : 0.0);
  }
  bool active = false;
  double where = 0.0;
  double elapsed = 0.0;
  for (const auto& d : s.disruptions) {
    if (!d.active_at(s.clock)) continue;
    active = true;
    double lo = w.geometry().line_length();
    double hi = 0.0;
    for (BlockIndex b : d.blocks) {
      lo = std::min(lo, w.geometry().block_interval(b).lo);
      hi = std::max(hi, w.geometry().block_interval(b).hi);
    }
    where = w.geometry().line_length() > 0.0 ? 0.5 * (lo + hi) / w.geometry().line_length() : 0.0;
    elapsed = std::min(1.0, static_cast<double>(s.clock - d.start_s) / 3600.0);
  }
  obs.push_back(active ? 1.0 : 0.0);
  obs.push_back(where);
  obs.push_back(elapsed);
  obs.push_back(active ? 1.0 : 0.0);  // remaining time is never observed
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(s.clock % 86400) / 86400.0;
  obs.push_back(std::sin(phase));
  obs.push_back(std::cos(phase));
  return obs;
}

}  // namespace railsim
