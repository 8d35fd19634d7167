#include "railsim/timetable.hpp"

#include <algorithm>
#include <sstream>

#include "railsim/error.hpp"
#include "railsim/geometry.hpp"
#include "railsim/io.hpp"

namespace railsim {

std::string_view to_string(PostAction a) {
  switch (a) {
    case PostAction::kProceed: return "proceed";
    case PostAction::kTurnBack: return "turn_back";
    case PostAction::kToDepot: return "to_depot";
  }
  return "?";
}

namespace {

PostAction parse_post_action(const std::string& s) {
  if (s == "proceed") return PostAction::kProceed;
  if (s == "turn_back") return PostAction::kTurnBack;
  if (s == "to_depot") return PostAction::kToDepot;
  throw Error(ErrorCode::kParse, "unknown post_action '" + s + "'");
}

BlockIndex platform_block(const RouteModel& model, const TimetableEntry& e) {
  auto b = model.find_platform(e.station, e.platform);
  if (!b) {
    throw Error(ErrorCode::kDanglingReference, "timetable: platform " + e.platform + " does not exist at station " +
                                                   model.stations()[static_cast<std::size_t>(e.station)].id);
  }
  return *b;
}

// Index of the neighbouring entry of the same train, or -1.
std::ptrdiff_t neighbour(const Timetable& tt, std::size_t i, int step) {
  for (std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + step; j >= 0 && j < std::ssize(tt.entries); j += step) {
    if (tt.entries[static_cast<std::size_t>(j)].train == tt.entries[i].train) return j;
  }
  return -1;
}

int find_route(const RouteModel& model, BlockIndex platform, Direction d, RouteKind kind) {
  for (int r : model.routes_from(platform, d)) {
    if (model.routes()[static_cast<std::size_t>(r)].kind == kind) return r;
  }
  return -1;
}

}  // namespace

std::vector<std::string> Timetable::trains() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (std::find(out.begin(), out.end(), e.train) == out.end()) out.push_back(e.train);
  }
  return out;
}

std::vector<const TimetableEntry*> Timetable::entries_of(std::string_view train) const {
  std::vector<const TimetableEntry*> out;
  for (const auto& e : entries) {
    if (e.train == train) out.push_back(&e);
  }
  return out;
}

Timetable parse_timetable_csv(std::string_view text, const RouteModel& model) {
  Timetable tt;
  for (const auto& row :
       parse_csv(text, {"train", "station", "arrive_hms", "depart_hms", "platform", "post_action"})) {
    TimetableEntry e;
    e.train = row.at("train");
    auto st = model.find_station(row.at("station"));
    if (!st) throw Error(ErrorCode::kDanglingReference, "timetable: unknown station " + row.at("station"));
    e.station = *st;
    e.arrive_s = parse_hms(row.at("arrive_hms"));
    e.depart_s = parse_hms(row.at("depart_hms"));
    e.platform = row.at("platform");
    e.post_action = parse_post_action(row.at("post_action"));
    tt.entries.push_back(std::move(e));
  }
  validate_timetable(tt, model);
  return tt;
}

std::string serialize_timetable_csv(const Timetable& tt, const RouteModel& model) {
  std::ostringstream out;
  out << "train,station,arrive_hms,depart_hms,platform,post_action\n";
  for (const auto& e : tt.entries) {
    out << e.train << ',' << model.stations()[static_cast<std::size_t>(e.station)].id << ','
        << format_hms(e.arrive_s) << ',' << format_hms(e.depart_s) << ',' << e.platform << ','
        << to_string(e.post_action) << '\n';
  }
  return out.str();
}

void validate_timetable(const Timetable& tt, const RouteModel& model) {
  for (std::size_t i = 0; i < tt.entries.size(); ++i) {
    const auto& e = tt.entries[i];
    if (e.station < 0 || e.station >= static_cast<int>(model.stations().size())) {
      throw Error(ErrorCode::kDanglingReference, "timetable: unknown station index");
    }
    platform_block(model, e);
    if (e.depart_s < e.arrive_s) {
      throw Error(ErrorCode::kInvariant, "timetable: train " + e.train + " departs before it arrives at " +
                                             model.stations()[static_cast<std::size_t>(e.station)].id);
    }
    auto prev = neighbour(tt, i, -1);
    if (prev >= 0) {
      const auto& p = tt.entries[static_cast<std::size_t>(prev)];
      if (e.arrive_s <= p.depart_s) {
        throw Error(ErrorCode::kInvariant, "timetable: train " + e.train + " entries are not increasing in time");
      }
      if (p.station == e.station) {
        throw Error(ErrorCode::kInvariant, "timetable: train " + e.train + " repeats a station consecutively");
      }
      if (p.post_action == PostAction::kToDepot) {
        throw Error(ErrorCode::kInvariant, "timetable: train " + e.train + " continues after going to depot");
      }
    }
  }
}

Direction departure_direction(const Timetable& tt, const RouteModel& model, std::size_t i) {
  const auto& e = tt.entries[i];
  auto next = neighbour(tt, i, +1);
  auto prev = neighbour(tt, i, -1);
  if (next >= 0) return LineGeometry::direction_between(e.station, tt.entries[static_cast<std::size_t>(next)].station);
  if (prev >= 0) {
    const Direction in = LineGeometry::direction_between(tt.entries[static_cast<std::size_t>(prev)].station, e.station);
    return e.post_action == PostAction::kProceed ? in : opposite(in);
  }
  // A lone entry: face whichever way the line continues.
  return e.station + 1 < static_cast<int>(model.stations().size()) ? Direction::kUp : Direction::kDown;
}

std::vector<TrainPlacement> initial_placements(const Timetable& tt, const RouteModel& model, double length_m,
                                               int capacity) {
  std::vector<TrainPlacement> out;
  for (const auto& name : tt.trains()) {
    std::size_t first = 0;
    while (tt.entries[first].train != name) ++first;
    const auto& e = tt.entries[first];
    TrainPlacement p;
    p.name = name;
    p.block = platform_block(model, e);
    p.direction = departure_direction(tt, model, first);
    p.offset_m = model.block(p.block).length_m;
    p.length_m = length_m;
    p.capacity = capacity;
    p.at_platform_stop = true;
    out.push_back(p);
  }
  return out;
}

OperationRules extract_operation_rules(const Timetable& tt, const RouteModel& model, Seconds lead) {
  validate_timetable(tt, model);
  OperationRules out;
  for (std::size_t i = 0; i < tt.entries.size(); ++i) {
    const auto& e = tt.entries[i];
    const bool has_next = neighbour(tt, i, +1) >= 0;
    if (!has_next && e.post_action != PostAction::kToDepot) continue;
    OperationRule r;
    r.t = e.depart_s;
    r.request_t = e.depart_s;
    r.station = e.station;
    r.platform = platform_block(model, e);
    r.direction = departure_direction(tt, model, i);
    const std::string where = model.stations()[static_cast<std::size_t>(e.station)].id + "/" + e.platform;
    if (e.post_action == PostAction::kProceed) {
      r.kind = RuleKind::kDepart;
      r.point = model.departure_point(r.platform, r.direction);
      if (r.point < 0) {
        throw Error(ErrorCode::kDanglingReference, "timetable: no departure from " + where + " toward " +
                                                       std::string(to_string(r.direction)));
      }
    } else {
      const RouteKind kind = e.post_action == PostAction::kTurnBack ? RouteKind::kTurnback : RouteKind::kDepot;
      r.kind = e.post_action == PostAction::kTurnBack ? RuleKind::kTurnBack : RuleKind::kToDepot;
      r.route = find_route(model, r.platform, r.direction, kind);
      if (r.route < 0 && kind == RouteKind::kDepot) {
        r.direction = opposite(r.direction);
        r.route = find_route(model, r.platform, r.direction, kind);
      }
      if (r.route < 0) {
        throw Error(ErrorCode::kDanglingReference,
                    "timetable: no " + std::string(to_string(e.post_action)) + " route from " + where);
      }
      r.point = model.routes()[static_cast<std::size_t>(r.route)].entry_point;
      r.request_t = e.depart_s - lead;
    }
    out.rules.push_back(r);
  }
  std::stable_sort(out.rules.begin(), out.rules.end(), [](const OperationRule& a, const OperationRule& b) {
    return a.t != b.t ? a.t < b.t : a.platform < b.platform;
  });
  return out;
}

std::vector<std::string> rule_trace(const OperationRules& rules, const RouteModel& model) {
  struct Line {
    Seconds t;
    std::size_t order;
    std::string text;
  };
  std::vector<Line> lines;
  for (const auto& r : rules.rules) {
    const auto& point = model.control_points()[static_cast<std::size_t>(r.point)].id;
    if (r.route >= 0) {
      lines.push_back({r.request_t, lines.size(),
                       std::to_string(r.request_t) + " request " + model.routes()[static_cast<std::size_t>(r.route)].id});
    }
    if (r.kind != RuleKind::kDepart) {
      lines.push_back({r.t, lines.size(), std::to_string(r.t) + " reverse-if-needed " + model.block(r.platform).id});
    }
    lines.push_back({r.t, lines.size(), std::to_string(r.t) + " proceed " + point});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.t < b.t; });
  std::vector<std::string> out;
  for (auto& l : lines) out.push_back(std::move(l.text));
  return out;
}

}  // namespace railsim
