#pragma once

#include <array>
#include <span>
#include <vector>

#include "railsim/geometry.hpp"
#include "railsim/sim.hpp"
#include "railsim/timetable.hpp"

namespace railsim {

// A station side where the RL agent chooses between going on and turning back.
struct DecisionPoint {
  int station = -1;
  Direction direction = Direction::kUp;  // direction of arriving trains, toward the disruption
  BlockIndex platform = kNoBlock;
  int departure_point = -1;
  int turnback_route = -1;
};

struct ControlAssignment {
  std::vector<bool> rl_point;     // per control point
  std::vector<bool> rl_station;   // per station
  std::vector<BlockIndex> span_blocks;  // blocks between the bounding stations, line order
  std::vector<DecisionPoint> decision_points;
  int span_lo = -1;  // bounding stations, -1 without disruption
  int span_hi = -1;

  bool any_rl() const { return span_lo >= 0; }
  std::size_t rl_point_count() const;
};

// Bounds the disrupted span by the nearest turnaround or depot station on each
// side; every control point at a station inside the bounds goes to the RL side.
ControlAssignment assign_control(const RouteModel& model, const LineGeometry& geometry,
                                 std::span<const Disruption> disruptions);

inline constexpr std::array<Seconds, 4> kDwellBuckets{0, 30, 60, 120};
inline constexpr int kMacroChoices = 2 * static_cast<int>(kDwellBuckets.size());

enum class MacroChoice : std::uint8_t { kProceed = 0, kTurnBack = 1 };

struct MacroAction {
  MacroChoice choice = MacroChoice::kProceed;
  Seconds extra_dwell_s = 0;
};

// Index in [0, kMacroChoices): choice = a / 4, bucket = a % 4.
MacroAction decode_macro(int index);
int encode_macro(MacroAction a);

class TimetableAgent {
 public:
  struct State {
    std::vector<std::size_t> cursor;  // per platform group: next rule to execute
  };

  TimetableAgent(const OperationRules& rules, const RouteModel& model);

  State start() const;
  // Due commands for timetable-assigned points. `assignment` may be null (everything timetable).
  std::vector<Command> act(const Simulator& sim, const SimState& s, State& st,
                           const ControlAssignment* assignment) const;

  std::size_t pending(const State& st) const;
  const OperationRules& rules() const { return rules_; }

 private:
  OperationRules rules_;
  std::vector<BlockIndex> group_platform_;
  std::vector<std::vector<std::size_t>> groups_;  // rule indices per platform, time ordered
};

class RbAgent {
 public:
  struct Plan {
    int train = -1;
    BlockIndex platform = kNoBlock;
    bool turn_back = false;
    bool reversed = false;
    Seconds go_at = 0;  // earliest second to request the route
    int route = -1;
    int point = -1;
  };
  struct State {
    std::vector<int> latched;  // macro index per decision point
    std::vector<Plan> plans;
  };

  RbAgent(const RouteModel& model, const ControlAssignment& assignment, int base_dwell_s);

  State start() const;
  void latch(State& st, std::span<const int> actions) const;
  // Commands for rl-assigned points; refusals are appended to `events`.
  std::vector<Command> act(const Simulator& sim, const SimState& s, State& st, std::vector<Event>& events) const;

  // Starts a plan for a train standing at an rl platform. Public for tests.
  Plan plan_for(const SimState& s, int train, BlockIndex platform, MacroAction macro, std::vector<Event>& events) const;

 private:
  const RouteModel* model_;
  const ControlAssignment* assignment_;
  int base_dwell_s_;
  std::vector<BlockIndex> platforms_;  // rl platforms
};

}  // namespace railsim
