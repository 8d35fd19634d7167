#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "railsim/passenger.hpp"
#include "railsim/route.hpp"

namespace railsim {

// Kinematic and operating constants. Typical commuter-rail values.
struct SimParams {
  double accel_mps2 = 0.8;
  double brake_mps2 = 1.0;
  double guard_m = 5.0;
  double lookahead_m = 5000.0;
  int base_dwell_s = 30;
};

enum class Aspect : std::uint8_t { kStop = 0, kProceed = 1 };

enum class TrainPhase : std::uint8_t {
  kRunning,
  kDwelling,
  kHeld,
  kReversedPending,
  kInDepot,
};

std::string_view to_string(TrainPhase p);

struct TrainState {
  int id = 0;
  std::string name;
  std::vector<BlockIndex> path;  // occupied blocks, tail first, head last
  double offset_m = 0.0;         // head offset from the head block's entry boundary
  double length_m = 0.0;
  double velocity_mps = 0.0;
  Direction direction = Direction::kUp;
  int capacity = 0;
  std::vector<PassengerGroup> onboard;
  TrainPhase phase = TrainPhase::kRunning;
  int dwell_remaining_s = 0;
  BlockIndex served_platform = kNoBlock;  // platform whose stop is already made
  int active_route = -1;                  // route being traversed, if any
  bool stopped_between_stations = false;

  BlockIndex head() const { return path.empty() ? kNoBlock : path.back(); }
  bool in_service() const { return phase != TrainPhase::kInDepot; }
};

struct Disruption {
  std::vector<BlockIndex> blocks;
  Seconds start_s = 0;
  Seconds duration_s = 0;

  bool active_at(Seconds t) const { return t >= start_s && t < start_s + duration_s; }
  bool operator==(const Disruption&) const = default;
};

struct TrainPlacement {
  std::string name;
  BlockIndex block = kNoBlock;
  double offset_m = 0.0;
  Direction direction = Direction::kUp;
  double length_m = 160.0;
  int capacity = 800;
  bool at_platform_stop = true;  // start as held at a served platform
};

enum class EventKind : std::uint8_t {
  kArrive,
  kDepart,
  kStopBetweenStationsBegin,
  kStopBetweenStationsEnd,
  kLock,
  kRelease,
  kReject,
  kReverse,
  kRefuse,
  kDepot,
  kDisruptionBegin,
  kDisruptionEnd,
};

std::string_view to_string(EventKind k);

struct Event {
  Seconds t = 0;
  EventKind kind = EventKind::kArrive;
  int train = -1;
  int station = -1;
  BlockIndex block = kNoBlock;
  std::string detail;

  bool operator==(const Event&) const = default;
};

struct SetSignal {
  int point = -1;
  Aspect aspect = Aspect::kStop;
};
struct RequestRoute {
  int route = -1;
};
struct ReleaseRoute {
  int route = -1;
};
struct ReverseTrain {
  int train = -1;
};
using Command = std::variant<SetSignal, RequestRoute, ReleaseRoute, ReverseTrain>;

struct RouteLock {
  bool locked = false;
  int user = -1;  // train that entered the route, -1 until one does
};

struct SimState {
  Seconds clock = 0;
  std::vector<TrainState> trains;
  std::vector<Aspect> aspects;     // per control point
  std::vector<RouteLock> locks;    // per route
  std::vector<int> block_owner;    // per block: train index or -1
  std::vector<Disruption> disruptions;
  PassengerWorld passengers;
  std::uint64_t seed = 0;
};

struct RouteDecision {
  bool granted = false;
  std::string reason;  // "conflict", "occupied", "disrupted", "locked"
};

struct SpeedTarget {
  double distance_m = 0.0;  // from head to the boundary where the limit starts
  double vmax_mps = 0.0;
};

struct KinematicResult {
  double velocity_mps = 0.0;
  double displacement_m = 0.0;
};

// One dt = 1 s update of a single train given its authority.
KinematicResult kinematic_step(double velocity, double authority, double vmax_here,
                               std::span<const SpeedTarget> targets, const SimParams& params);

class Simulator {
 public:
  Simulator(const RouteModel& model, const OdMatrix& od, SimParams params);

  const RouteModel& model() const { return *model_; }
  const SimParams& params() const { return params_; }
  const OdMatrix& od() const { return *od_; }

  // Throws Error(kInvalidArgument) on overlapping or off-model placements.
  SimState init(std::span<const TrainPlacement> placements, Seconds clock, std::uint64_t seed,
                bool stochastic_passengers = false) const;

  // Throws Error(kInvalidArgument) on unknown point or proceed-without-lock.
  void set_signal(SimState& s, int point, Aspect aspect) const;
  RouteDecision request_route(SimState& s, int route) const;
  bool release_route(SimState& s, int route) const;
  // Throws Error(kInvalidArgument) unless the train is at standstill.
  void reverse_train(SimState& s, int train, std::vector<Event>* events = nullptr) const;

  double movement_authority(const SimState& s, int train) const;

  std::vector<Event> step(SimState& s, std::span<const Command> commands) const;

  // Helpers used by agents and metrics.
  bool block_disrupted(const SimState& s, BlockIndex b) const;
  bool route_locked_by_conflict(const SimState& s, int route) const;
  // Train standing still at a platform it has served, or -1.
  int train_ready_at(const SimState& s, BlockIndex platform) const;
  PassengerAccounting accounting(const SimState& s) const;
  // Blocks covered by [head - length, head] for a train.
  static bool occupies(const TrainState& t, BlockIndex b);

 private:
  struct Scan {
    double authority = 0.0;
    std::vector<SpeedTarget> targets;
    std::vector<BlockIndex> ahead;        // blocks the head will traverse, in order
    std::vector<int> route_at;            // route context after entering each of `ahead`
    std::vector<int> passed_departure;    // departure point passed when entering each of `ahead`, or -1
  };
  Scan scan(const SimState& s, int train, bool stop_at_platforms) const;
  void apply(SimState& s, const Command& c, std::vector<Event>& events) const;
  void move_train(SimState& s, int train, std::vector<Event>& events) const;
  void rebuild_tail(SimState& s, TrainState& t) const;

  const RouteModel* model_;
  const OdMatrix* od_;
  SimParams params_;
  std::vector<std::vector<int>> routes_of_block_;
};

}  // namespace railsim
