#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "railsim/agents.hpp"
#include "railsim/geometry.hpp"
#include "railsim/passenger.hpp"
#include "railsim/sim.hpp"
#include "railsim/timetable.hpp"

namespace railsim {

// Everything immutable an episode needs, plus the undisrupted reference run.
class World {
 public:
  struct Snapshot {
    SimState sim;
    TimetableAgent::State agent;
  };

  static std::shared_ptr<const World> load(std::string_view route_json, std::string_view timetable_csv,
                                           std::string_view od_csv, SimParams params = {});
  static std::shared_ptr<const World> load_files(const std::string& route, const std::string& timetable,
                                                 const std::string& od, SimParams params = {});

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const RouteModel& model() const { return model_; }
  const LineGeometry& geometry() const { return *geometry_; }
  const Timetable& timetable() const { return timetable_; }
  const OperationRules& rules() const { return rules_; }
  const OdMatrix& od() const { return od_; }
  const Simulator& sim() const { return *sim_; }
  const TimetableAgent& timetable_agent() const { return *agent_; }
  const std::vector<TrainPlacement>& placements() const { return placements_; }
  Seconds service_start() const { return service_start_; }
  Seconds service_end() const { return service_end_; }
  // Fingerprint of the three input documents.
  std::uint64_t fingerprint() const { return fingerprint_; }

  // Undisrupted, timetable-only state at `clock` (clamped into the service day).
  Snapshot snapshot_at(Seconds clock) const;
  // L1 distance between the reference head-block histogram at `s.clock` and the actual one.
  double deviation(const SimState& s) const;

 private:
  World() = default;
  void build_reference();

  RouteModel model_;
  std::unique_ptr<LineGeometry> geometry_;
  Timetable timetable_;
  OperationRules rules_;
  OdMatrix od_;
  std::unique_ptr<Simulator> sim_;
  std::unique_ptr<TimetableAgent> agent_;
  std::vector<TrainPlacement> placements_;
  Seconds service_start_ = 0;
  Seconds service_end_ = 0;
  std::uint64_t fingerprint_ = 0;
  Seconds snapshot_every_ = 300;
  std::vector<Snapshot> snapshots_;
  std::vector<std::size_t> planned_offset_;  // per second since service_start_, into planned_heads_
  std::vector<BlockIndex> planned_heads_;
};

// Line position of a train's midpoint.
double train_midpoint(const World& world, const TrainState& t);

// ---------------------------------------------------------------------------

struct RewardWeights {
  double w_arrived = 1.0;
  double w_speed = 0.0;
  double w_stoppage = 0.01;
  double w_congestion = 0.0;
  double w_deviation = 0.0;

  bool operator==(const RewardWeights&) const = default;
};

// "experiment": arrivals and stoppage only. "recovery": adds schedule deviation.
RewardWeights reward_preset(std::string_view name);

struct TransitionAggregates {
  double arrived = 0.0;       // persons delivered during the transition
  double mean_speed = 0.0;    // m/s, averaged over trains in service and seconds
  double stop_seconds = 0.0;  // train-seconds stopped between stations
  double excess_load = 0.0;   // load factor above the threshold, summed over trains, averaged over seconds
  double deviation = 0.0;     // mean deviation over the transition's seconds
};

inline constexpr double kCongestionThreshold = 0.8;

double compute_reward(const TransitionAggregates& a, const RewardWeights& w);

struct EpisodeSpec {
  Seconds start_s = 0;
  Seconds horizon_s = 3600;  // duration from start_s
  std::vector<Disruption> disruptions;
  std::uint64_t seed = 0;
  bool stochastic_passengers = false;
  // Ignore the assignment: the timetable agent commands every point.
  bool timetable_only = false;
};

struct RunAccumulators {
  std::int64_t generated = 0;
  std::int64_t arrived = 0;
  std::int64_t arrived_at_start = 0;
  std::int64_t stop_seconds = 0;
  std::int64_t stop_events = 0;
  double deviation_sum = 0.0;
  std::int64_t deviation_samples = 0;
  std::int64_t seconds = 0;
};

// One simulation run driven by the timetable agent and, inside the assigned span, the RB agent.
class Episode {
 public:
  using Observer = std::function<void(const SimState&, const std::vector<Event>&)>;

  Episode(std::shared_ptr<const World> world, EpisodeSpec spec);
  Episode(const Episode&) = delete;
  Episode& operator=(const Episode&) = delete;

  const World& world() const { return *world_; }
  const EpisodeSpec& spec() const { return spec_; }
  const SimState& state() const { return sim_; }
  const ControlAssignment& assignment() const { return *assignment_; }
  const RunAccumulators& accumulators() const { return acc_; }
  Seconds end_s() const { return spec_.start_s + spec_.horizon_s; }
  bool done() const { return sim_.clock >= end_s(); }

  void latch(std::span<const int> macro_actions);
  // Up to `seconds` steps; stops early at the horizon.
  TransitionAggregates advance(Seconds seconds, const Observer& observer = {});

  // Seconds since the train at decision point i arrived, or -1 without a train.
  Seconds standing_time(std::size_t decision_point) const;
  // Refusal events since the last call.
  std::vector<Event> take_refusals();

 private:
  void setup();

  std::shared_ptr<const World> world_;
  EpisodeSpec spec_;
  SimState sim_;
  TimetableAgent::State agent_;
  std::unique_ptr<ControlAssignment> assignment_;
  std::unique_ptr<RbAgent> rb_;
  RbAgent::State rb_state_;
  RunAccumulators acc_;
  std::vector<Seconds> arrived_at_;  // per train, last platform arrival clock
  std::vector<Event> refusals_;
};

// ---------------------------------------------------------------------------

struct EpisodeConfig {
  std::string route_path;
  std::string timetable_path;
  std::string od_path;
  std::array<Seconds, 2> sim_start_window{0, 0};         // absolute seconds
  std::vector<std::vector<std::string>> location_sets;    // candidate disrupted block sets
  std::array<Seconds, 2> disruption_start_window{0, 0};  // absolute seconds
  std::array<Seconds, 2> duration_range{1800, 1800};
  Seconds horizon_s = 3600;
  Seconds decision_interval_s = 60;
  RewardWeights weights = reward_preset("experiment");
  std::uint64_t seed = 0;
  bool stochastic_passengers = false;
};

// Relative paths in the file are resolved against the file's directory.
EpisodeConfig parse_episode_config(std::string_view json_text, const std::string& base_dir = ".");
EpisodeConfig load_episode_config(const std::string& path);

struct DomainSample {
  Disruption disruption;
  Seconds sim_start = 0;
};

// Throws Error(kInvalidArgument) on empty or inverted ranges.
DomainSample randomize_domain(const EpisodeConfig& cfg, const RouteModel& model, std::mt19937_64& rng);

struct StepInfo {
  std::vector<Event> refusals;
  TransitionAggregates aggregates;
  Seconds clock = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class RailEnv {
 public:
  RailEnv(std::shared_ptr<const World> world, EpisodeConfig cfg);

  std::size_t observation_size() const { return obs_size_; }
  // One categorical dimension of kMacroChoices per decision point.
  std::vector<int> action_dims() const;
  std::size_t raw_control_points() const;

  std::vector<double> reset(std::uint64_t seed);
  // Fixed scenario instead of a randomized one.
  std::vector<double> reset_with(const EpisodeSpec& spec);
  StepResult step(std::span<const int> actions, const Episode::Observer& observer = {});

  const Episode& episode() const { return *episode_; }
  const EpisodeConfig& config() const { return cfg_; }
  const World& world() const { return *world_; }

 private:
  std::vector<double> observe() const;

  std::shared_ptr<const World> world_;
  EpisodeConfig cfg_;
  std::size_t obs_size_ = 0;
  std::size_t decision_points_ = 0;
  std::unique_ptr<Episode> episode_;
  std::vector<Event> pending_refusals_;
};

}  // namespace railsim
