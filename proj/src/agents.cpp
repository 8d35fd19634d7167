#include "railsim/agents.hpp"

#include <algorithm>
#include <map>

#include "railsim/error.hpp"

namespace railsim {

std::size_t ControlAssignment::rl_point_count() const {
  return static_cast<std::size_t>(std::count(rl_point.begin(), rl_point.end(), true));
}

ControlAssignment assign_control(const RouteModel& model, const LineGeometry& geometry,
                                 std::span<const Disruption> disruptions) {
  ControlAssignment a;
  const int n = static_cast<int>(model.stations().size());
  a.rl_point.assign(model.control_points().size(), false);
  a.rl_station.assign(static_cast<std::size_t>(n), false);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& d : disruptions) {
    for (BlockIndex b : d.blocks) {
      if (b < 0 || b >= static_cast<BlockIndex>(model.blocks().size())) {
        throw Error(ErrorCode::kInvalidArgument, "disrupted block is not on the line");
      }
      lo = std::min(lo, geometry.block_interval(b).lo);
      hi = std::max(hi, geometry.block_interval(b).hi);
    }
  }
  if (n == 0 || lo > hi) return a;

  constexpr double kEps = 1e-6;
  int inner_lo = 0;
  int inner_hi = n - 1;
  for (int s = 0; s < n; ++s) {
    if (geometry.station_interval(s).hi <= lo + kEps) inner_lo = s;
  }
  for (int s = n - 1; s >= 0; --s) {
    if (geometry.station_interval(s).lo >= hi - kEps) inner_hi = s;
  }
  auto bounding = [&](int s) {
    const auto& st = model.stations()[static_cast<std::size_t>(s)];
    return st.can_turn_back || st.has_depot;
  };
  a.span_lo = inner_lo;
  while (a.span_lo > 0 && !bounding(a.span_lo)) --a.span_lo;
  a.span_hi = inner_hi;
  while (a.span_hi < n - 1 && !bounding(a.span_hi)) ++a.span_hi;

  for (int s = a.span_lo; s <= a.span_hi; ++s) a.rl_station[static_cast<std::size_t>(s)] = true;
  for (std::size_t p = 0; p < model.control_points().size(); ++p) {
    const int st = model.control_points()[p].station;
    a.rl_point[p] = st >= 0 && a.rl_station[static_cast<std::size_t>(st)];
  }

  const double span_from = geometry.station_interval(a.span_lo).lo;
  const double span_to = geometry.station_interval(a.span_hi).hi;
  std::vector<std::pair<std::pair<double, double>, BlockIndex>> span;
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(model.blocks().size()); ++b) {
    const auto& iv = geometry.block_interval(b);
    if (iv.lo >= span_from - kEps && iv.hi <= span_to + kEps) span.push_back({{iv.lo, iv.hi}, b});
  }
  std::sort(span.begin(), span.end());
  for (const auto& [iv, b] : span) a.span_blocks.push_back(b);

  for (int s = a.span_lo; s <= a.span_hi; ++s) {
    const auto& st = model.stations()[static_cast<std::size_t>(s)];
    if (st.is_terminal || !st.can_turn_back) continue;
    const bool below = s <= inner_lo;
    const bool above = s >= inner_hi;
    if (below == above) continue;
    const Direction toward = below ? Direction::kUp : Direction::kDown;
    for (int point : model.departure_points(s, toward)) {
      const ControlPoint& cp = model.control_points()[static_cast<std::size_t>(point)];
      for (int r : model.routes_from(cp.block, opposite(toward))) {
        if (model.routes()[static_cast<std::size_t>(r)].kind != RouteKind::kTurnback) continue;
        a.decision_points.push_back({s, toward, cp.block, point, r});
        break;
      }
    }
  }
  return a;
}

MacroAction decode_macro(int index) {
  if (index < 0 || index >= kMacroChoices) {
    throw Error(ErrorCode::kInvalidArgument, "macro action index out of range: " + std::to_string(index));
  }
  const int nb = static_cast<int>(kDwellBuckets.size());
  return {index / nb == 0 ? MacroChoice::kProceed : MacroChoice::kTurnBack,
          kDwellBuckets[static_cast<std::size_t>(index % nb)]};
}

int encode_macro(MacroAction a) {
  auto it = std::find(kDwellBuckets.begin(), kDwellBuckets.end(), a.extra_dwell_s);
  if (it == kDwellBuckets.end()) throw Error(ErrorCode::kInvalidArgument, "dwell extension is not a bucket");
  return static_cast<int>(a.choice) * static_cast<int>(kDwellBuckets.size()) +
         static_cast<int>(it - kDwellBuckets.begin());
}

// ---------------------------------------------------------------------------

TimetableAgent::TimetableAgent(const OperationRules& rules, const RouteModel& model) : rules_(rules) {
  (void)model;
  std::map<BlockIndex, std::size_t> group_of;
  for (std::size_t i = 0; i < rules_.rules.size(); ++i) {
    const BlockIndex p = rules_.rules[i].platform;
    auto [it, fresh] = group_of.emplace(p, groups_.size());
    if (fresh) {
      groups_.emplace_back();
      group_platform_.push_back(p);
    }
    groups_[it->second].push_back(i);
  }
}

TimetableAgent::State TimetableAgent::start() const { return {std::vector<std::size_t>(groups_.size(), 0)}; }

std::size_t TimetableAgent::pending(const State& st) const {
  std::size_t n = 0;
  for (std::size_t g = 0; g < groups_.size(); ++g) n += groups_[g].size() - st.cursor[g];
  return n;
}

std::vector<Command> TimetableAgent::act(const Simulator& sim, const SimState& s, State& st,
                                         const ControlAssignment* assignment) const {
  std::vector<Command> out;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (st.cursor[g] >= groups_[g].size()) continue;
    const OperationRule& r = rules_.rules[groups_[g][st.cursor[g]]];
    if (assignment && assignment->rl_point[static_cast<std::size_t>(r.point)]) continue;
    if (s.clock < r.request_t) continue;
    if (r.route >= 0 && !s.locks[static_cast<std::size_t>(r.route)].locked) {
      out.push_back(RequestRoute{r.route});
    }
    if (s.clock < r.t) continue;
    const int train = sim.train_ready_at(s, r.platform);
    if (train < 0) continue;
    const TrainState& t = s.trains[static_cast<std::size_t>(train)];
    if (r.kind == RuleKind::kDepart) {
      if (t.direction != r.direction) continue;
      out.push_back(SetSignal{r.point, Aspect::kProceed});
      ++st.cursor[g];
      continue;
    }
    if (t.direction != r.direction) out.push_back(ReverseTrain{train});
    const auto& lock = s.locks[static_cast<std::size_t>(r.route)];
    if (lock.locked && lock.user < 0) {
      out.push_back(SetSignal{r.point, Aspect::kProceed});
      ++st.cursor[g];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RbAgent::RbAgent(const RouteModel& model, const ControlAssignment& assignment, int base_dwell_s)
    : model_(&model), assignment_(&assignment), base_dwell_s_(base_dwell_s) {
  for (std::size_t s = 0; s < model.stations().size(); ++s) {
    if (!assignment.rl_station[s]) continue;
    for (const auto& p : model.stations()[s].platforms) platforms_.push_back(p.block);
  }
}

RbAgent::State RbAgent::start() const {
  return {std::vector<int>(assignment_->decision_points.size(), 0), {}};
}

void RbAgent::latch(State& st, std::span<const int> actions) const {
  if (actions.size() != st.latched.size()) {
    throw Error(ErrorCode::kInvalidArgument, "expected " + std::to_string(st.latched.size()) +
                                                 " macro actions, got " + std::to_string(actions.size()));
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    decode_macro(actions[i]);
    st.latched[i] = actions[i];
  }
}

RbAgent::Plan RbAgent::plan_for(const SimState& s, int train, BlockIndex platform, MacroAction macro,
                                std::vector<Event>& events) const {
  const auto& m = *model_;
  const TrainState& t = s.trains[static_cast<std::size_t>(train)];
  Plan p;
  p.train = train;
  p.platform = platform;
  const int station = m.block(platform).station;
  const int dep = m.departure_point(platform, t.direction);
  int tb = -1;
  for (int r : m.routes_from(platform, opposite(t.direction))) {
    if (m.routes()[static_cast<std::size_t>(r)].kind == RouteKind::kTurnback) {
      tb = r;
      break;
    }
  }
  bool turn = macro.choice == MacroChoice::kTurnBack;
  if (turn && (tb < 0 || t.phase == TrainPhase::kReversedPending)) {
    events.push_back({s.clock, EventKind::kRefuse, train, station, platform, "turn_back not possible here"});
    turn = false;
  }
  if (!turn && dep < 0) turn = tb >= 0;  // end of the line: nothing to do but turn
  p.turn_back = turn;
  p.go_at = s.clock + macro.extra_dwell_s;
  if (turn) {
    p.route = tb;
    p.point = m.routes()[static_cast<std::size_t>(tb)].entry_point;
  } else if (dep >= 0) {
    p.point = dep;
    p.route = m.control_points()[static_cast<std::size_t>(dep)].route;
  }
  return p;
}

std::vector<Command> RbAgent::act(const Simulator& sim, const SimState& s, State& st,
                                  std::vector<Event>& events) const {
  std::vector<Command> out;
  // Drop plans whose train has left.
  std::erase_if(st.plans, [&](const Plan& p) {
    const TrainState& t = s.trains[static_cast<std::size_t>(p.train)];
    return !t.in_service() || t.head() != p.platform || t.velocity_mps != 0.0;
  });
  for (BlockIndex platform : platforms_) {
    const int train = sim.train_ready_at(s, platform);
    if (train < 0) continue;
    auto it = std::find_if(st.plans.begin(), st.plans.end(), [&](const Plan& p) { return p.train == train; });
    if (it == st.plans.end()) {
      const TrainState& t = s.trains[static_cast<std::size_t>(train)];
      MacroAction macro;
      for (std::size_t i = 0; i < assignment_->decision_points.size(); ++i) {
        const auto& dp = assignment_->decision_points[i];
        if (dp.platform == platform && dp.direction == t.direction && t.phase == TrainPhase::kHeld) {
          macro = decode_macro(st.latched[i]);
        }
      }
      st.plans.push_back(plan_for(s, train, platform, macro, events));
      it = std::prev(st.plans.end());
    }
    Plan& p = *it;
    if (p.route < 0) continue;
    const auto& lock = s.locks[static_cast<std::size_t>(p.route)];
    if (p.turn_back && !p.reversed) {
      // Lock the turnback route first, then reverse under its protection.
      if (!lock.locked) {
        out.push_back(RequestRoute{p.route});
      } else {
        out.push_back(ReverseTrain{train});
        p.reversed = true;
        p.go_at = std::max<Seconds>(p.go_at, s.clock + base_dwell_s_);
      }
      continue;
    }
    if (s.clock < p.go_at) continue;
    if (!p.turn_back) {
      // Same as a timetable departure: the signal alone.
      out.push_back(SetSignal{p.point, Aspect::kProceed});
      continue;
    }
    if (!lock.locked) {
      out.push_back(RequestRoute{p.route});
    } else if (lock.user < 0) {
      out.push_back(SetSignal{p.point, Aspect::kProceed});
    }
  }
  return out;
}

}  // namespace railsim
