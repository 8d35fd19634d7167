#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "railsim/route.hpp"
#include "railsim/sim.hpp"

namespace railsim {

enum class PostAction : std::uint8_t { kProceed, kTurnBack, kToDepot };

std::string_view to_string(PostAction a);

struct TimetableEntry {
  std::string train;
  int station = -1;
  Seconds arrive_s = 0;
  Seconds depart_s = 0;
  std::string platform;  // platform id at `station`
  PostAction post_action = PostAction::kProceed;

  bool operator==(const TimetableEntry&) const = default;
};

struct Timetable {
  std::vector<TimetableEntry> entries;

  std::vector<std::string> trains() const;  // in order of first appearance
  std::vector<const TimetableEntry*> entries_of(std::string_view train) const;
};

Timetable parse_timetable_csv(std::string_view text, const RouteModel& model);
std::string serialize_timetable_csv(const Timetable& tt, const RouteModel& model);
// Throws Error(kInvariant) on non-monotone times or unknown platforms.
void validate_timetable(const Timetable& tt, const RouteModel& model);

// Direction a train leaves an entry in, after any reversal.
Direction departure_direction(const Timetable& tt, const RouteModel& model, std::size_t entry);

// Each train held at the platform of its first entry, facing its first departure.
std::vector<TrainPlacement> initial_placements(const Timetable& tt, const RouteModel& model, double length_m = 160.0,
                                               int capacity = 800);

enum class RuleKind : std::uint8_t { kDepart, kTurnBack, kToDepot };

struct OperationRule {
  Seconds t = 0;          // when the departure is due
  Seconds request_t = 0;  // when the route request is due (== t for plain departures)
  RuleKind kind = RuleKind::kDepart;
  int station = -1;
  BlockIndex platform = kNoBlock;
  Direction direction = Direction::kUp;  // direction of travel after the rule executes
  int point = -1;                        // signal opened at t
  int route = -1;                        // route requested at request_t, -1 for plain departures
};

struct OperationRules {
  std::vector<OperationRule> rules;  // sorted by (t, platform)
};

inline constexpr Seconds kRouteRequestLead = 30;

OperationRules extract_operation_rules(const Timetable& tt, const RouteModel& model,
                                       Seconds lead = kRouteRequestLead);

// One line per command, "t kind target", for inspection and rule-trace tests.
std::vector<std::string> rule_trace(const OperationRules& rules, const RouteModel& model);

}  // namespace railsim
