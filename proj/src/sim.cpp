#include "railsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "railsim/error.hpp"

namespace railsim {

std::string_view to_string(TrainPhase p) {
  switch (p) {
    case TrainPhase::kRunning: return "running";
    case TrainPhase::kDwelling: return "dwelling";
    case TrainPhase::kHeld: return "held";
    case TrainPhase::kReversedPending: return "reversed-pending";
    case TrainPhase::kInDepot: return "in-depot";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kArrive: return "arrive";
    case EventKind::kDepart: return "depart";
    case EventKind::kStopBetweenStationsBegin: return "stop_between_stations_begin";
    case EventKind::kStopBetweenStationsEnd: return "stop_between_stations_end";
    case EventKind::kLock: return "lock";
    case EventKind::kRelease: return "release";
    case EventKind::kReject: return "reject";
    case EventKind::kReverse: return "reverse";
    case EventKind::kRefuse: return "refuse";
    case EventKind::kDepot: return "depot";
    case EventKind::kDisruptionBegin: return "disruption_begin";
    case EventKind::kDisruptionEnd: return "disruption_end";
  }
  return "?";
}

KinematicResult kinematic_step(double v, double authority, double vmax_here, std::span<const SpeedTarget> targets,
                               const SimParams& p) {
  const double a = p.accel_mps2;
  const double b = p.brake_mps2;
  const double A = std::max(0.0, authority);

  double next = 0.0;
  // Below creep speed the guard is ignored so trains can close up to the boundary.
  const bool brake_for_authority = v > a && v * v / (2.0 * b) >= A - p.guard_m;
  bool brake_for_limit = false;
  double limit_floor = std::numeric_limits<double>::infinity();
  for (const auto& t : targets) {
    if (v > t.vmax_mps && (v * v - t.vmax_mps * t.vmax_mps) / (2.0 * b) >= t.distance_m - p.guard_m) {
      brake_for_limit = true;
      limit_floor = std::min(limit_floor, t.vmax_mps);
    }
  }
  // Highest v' that still stops within A: (v + v')/2 + v'^2/(2b) <= A.
  const double disc = 0.25 + (2.0 / b) * (A - 0.5 * v);
  const double cap = disc > 0.0 ? std::max(0.0, b * (-0.5 + std::sqrt(disc))) : 0.0;
  if (brake_for_authority) {
    // Full service braking, eased near the boundary so the train does not halt short of it.
    next = std::max(std::max(0.0, v - b), std::min(cap, v));
  } else if (brake_for_limit) {
    next = std::max(limit_floor, v - b);
  } else {
    next = std::min(vmax_here, v + a);
    next = std::min(next, cap);
    // Same for every lower limit ahead: v'^2 - vl^2 <= 2b (d - (v + v')/2).
    for (const auto& t : targets) {
      const double rhs = t.vmax_mps * t.vmax_mps + 2.0 * b * t.distance_m - b * v;
      const double d2 = b * b + 4.0 * rhs;
      const double tcap = d2 > 0.0 ? 0.5 * (-b + std::sqrt(d2)) : 0.0;
      next = std::min(next, std::max(0.0, tcap));
    }
  }
  double dx = 0.5 * (v + next);
  if (dx >= A) {
    dx = A;
    next = 0.0;
  }
  return {next, dx};
}

Simulator::Simulator(const RouteModel& model, const OdMatrix& od, SimParams params)
    : model_(&model), od_(&od), params_(params) {
  routes_of_block_.assign(model.blocks().size(), {});
  for (std::size_t r = 0; r < model.routes().size(); ++r) {
    for (BlockIndex b : model.routes()[r].blocks) {
      routes_of_block_[static_cast<std::size_t>(b)].push_back(static_cast<int>(r));
    }
  }
}

bool Simulator::occupies(const TrainState& t, BlockIndex b) {
  return std::find(t.path.begin(), t.path.end(), b) != t.path.end();
}

SimState Simulator::init(std::span<const TrainPlacement> placements, Seconds clock, std::uint64_t seed,
                         bool stochastic_passengers) const {
  const auto& m = *model_;
  SimState s;
  s.clock = clock;
  s.seed = seed;
  s.aspects.assign(m.control_points().size(), Aspect::kStop);
  s.locks.assign(m.routes().size(), {});
  s.block_owner.assign(m.blocks().size(), -1);
  s.passengers = PassengerWorld::create(m, stochastic_passengers, seed);

  for (std::size_t i = 0; i < placements.size(); ++i) {
    const auto& pl = placements[i];
    if (pl.block < 0 || pl.block >= static_cast<BlockIndex>(m.blocks().size())) {
      throw Error(ErrorCode::kInvalidArgument, "placement off-model: train " + pl.name);
    }
    const Block& blk = m.block(pl.block);
    if (pl.offset_m < 0.0 || pl.offset_m > blk.length_m || pl.length_m <= 0.0 || pl.capacity <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "placement off-model: train " + pl.name);
    }
    TrainState t;
    t.id = static_cast<int>(i);
    t.name = pl.name.empty() ? "T" + std::to_string(i) : pl.name;
    t.offset_m = pl.offset_m;
    t.length_m = pl.length_m;
    t.direction = pl.direction;
    t.capacity = pl.capacity;
    t.path = {pl.block};
    double covered = pl.offset_m;
    BlockIndex cur = pl.block;
    while (covered < pl.length_m) {
      const auto& preds = m.block(cur).pred[index_of(pl.direction)];
      if (preds.empty()) throw Error(ErrorCode::kInvalidArgument, "placement off-model: train " + t.name);
      cur = preds.front();
      t.path.insert(t.path.begin(), cur);
      covered += m.block(cur).length_m;
    }
    for (BlockIndex b : t.path) {
      auto& owner = s.block_owner[static_cast<std::size_t>(b)];
      if (owner >= 0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "overlapping placement: " + t.name + " and " + s.trains[static_cast<std::size_t>(owner)].name +
                        " on " + m.block(b).id);
      }
      owner = t.id;
    }
    if (pl.at_platform_stop && blk.is_platform) {
      t.served_platform = pl.block;
      t.phase = TrainPhase::kHeld;
    }
    s.trains.push_back(std::move(t));
  }
  return s;
}

bool Simulator::block_disrupted(const SimState& s, BlockIndex b) const {
  for (const auto& d : s.disruptions) {
    if (d.active_at(s.clock) && std::find(d.blocks.begin(), d.blocks.end(), b) != d.blocks.end()) return true;
  }
  return false;
}

bool Simulator::route_locked_by_conflict(const SimState& s, int route) const {
  for (int c : model_->routes()[static_cast<std::size_t>(route)].conflicts) {
    if (s.locks[static_cast<std::size_t>(c)].locked) return true;
  }
  return false;
}

void Simulator::set_signal(SimState& s, int point, Aspect aspect) const {
  const auto& points = model_->control_points();
  if (point < 0 || point >= static_cast<int>(points.size())) {
    throw Error(ErrorCode::kInvalidArgument, "unknown control point " + std::to_string(point));
  }
  if (aspect == Aspect::kProceed && points[static_cast<std::size_t>(point)].kind == ControlKind::kJunction) {
    bool held = false;
    for (std::size_t r = 0; r < model_->routes().size(); ++r) {
      const auto& route = model_->routes()[r];
      held = held || (route.entry_point == point && route.junction >= 0 && s.locks[r].locked);
    }
    if (!held) {
      throw Error(ErrorCode::kInvalidArgument,
                  "proceed-without-lock at " + points[static_cast<std::size_t>(point)].id);
    }
  }
  s.aspects[static_cast<std::size_t>(point)] = aspect;
}

RouteDecision Simulator::request_route(SimState& s, int route) const {
  const auto& routes = model_->routes();
  if (route < 0 || route >= static_cast<int>(routes.size())) {
    throw Error(ErrorCode::kInvalidArgument, "unknown route " + std::to_string(route));
  }
  const Route& r = routes[static_cast<std::size_t>(route)];
  if (s.locks[static_cast<std::size_t>(route)].locked) return {false, "locked"};
  if (route_locked_by_conflict(s, route)) return {false, "conflict"};
  for (BlockIndex b : r.blocks) {
    if (s.block_owner[static_cast<std::size_t>(b)] >= 0) return {false, "occupied"};
  }
  for (BlockIndex b : r.blocks) {
    if (block_disrupted(s, b)) return {false, "disrupted"};
  }
  s.locks[static_cast<std::size_t>(route)] = {true, -1};
  return {true, {}};
}

bool Simulator::release_route(SimState& s, int route) const {
  if (route < 0 || route >= static_cast<int>(model_->routes().size())) {
    throw Error(ErrorCode::kInvalidArgument, "unknown route " + std::to_string(route));
  }
  auto& lock = s.locks[static_cast<std::size_t>(route)];
  if (!lock.locked) return false;
  lock = {};
  const int ep = model_->routes()[static_cast<std::size_t>(route)].entry_point;
  bool still_held = false;
  for (std::size_t r = 0; r < model_->routes().size(); ++r) {
    still_held = still_held || (model_->routes()[r].entry_point == ep && s.locks[r].locked);
  }
  if (!still_held && model_->control_points()[static_cast<std::size_t>(ep)].kind == ControlKind::kJunction) {
    s.aspects[static_cast<std::size_t>(ep)] = Aspect::kStop;
  }
  return true;
}

void Simulator::reverse_train(SimState& s, int train, std::vector<Event>* events) const {
  if (train < 0 || train >= static_cast<int>(s.trains.size())) {
    throw Error(ErrorCode::kInvalidArgument, "unknown train " + std::to_string(train));
  }
  TrainState& t = s.trains[static_cast<std::size_t>(train)];
  if (!t.in_service() || t.velocity_mps != 0.0 || t.phase == TrainPhase::kDwelling) {
    throw Error(ErrorCode::kInvalidArgument, "reverse requires a train at standstill: " + t.name);
  }
  const auto& m = *model_;
  // New head is the old tail.
  double covered = t.offset_m;
  for (std::size_t k = t.path.size() - 1; k-- > 1;) covered += m.block(t.path[k]).length_m;
  const BlockIndex tail = t.path.front();
  const double tail_len = m.block(tail).length_m;
  const double tail_offset = t.path.size() > 1 ? tail_len - (t.length_m - covered) : t.offset_m - t.length_m;
  std::reverse(t.path.begin(), t.path.end());
  t.offset_m = std::clamp(tail_len - tail_offset, 0.0, tail_len);
  t.direction = opposite(t.direction);
  t.active_route = -1;
  t.phase = TrainPhase::kReversedPending;
  const Block& head = m.block(t.head());
  if (head.is_platform) {
    t.served_platform = t.head();
    alight_not_ahead(m, s.passengers, t.onboard, t.direction, head.station);
    board_waiting(t.onboard, t.capacity, t.direction, s.passengers.stations[static_cast<std::size_t>(head.station)]);
  }
  if (events) events->push_back({s.clock, EventKind::kReverse, train, head.station, t.head(), {}});
}

Simulator::Scan Simulator::scan(const SimState& s, int train, bool stop_at_platforms) const {
  const auto& m = *model_;
  const TrainState& t = s.trains[static_cast<std::size_t>(train)];
  Scan sc;
  const Direction d = t.direction;
  BlockIndex cur = t.head();
  double dist = m.block(cur).length_m - t.offset_m;
  int route = t.active_route;
  auto position_in = [&](int r, BlockIndex b) -> int {
    if (r < 0) return -1;
    const auto& blocks = m.routes()[static_cast<std::size_t>(r)].blocks;
    auto it = std::find(blocks.begin(), blocks.end(), b);
    return it == blocks.end() ? -1 : static_cast<int>(it - blocks.begin());
  };
  int pos = position_in(route, cur);
  if (pos < 0) route = -1;

  if (stop_at_platforms && m.block(cur).is_platform && t.served_platform != cur) {
    sc.authority = std::min(dist, params_.lookahead_m);
    return sc;
  }
  while (dist < params_.lookahead_m) {
    BlockIndex next = kNoBlock;
    int next_route = -1;
    int passed = -1;
    if (route >= 0 && pos + 1 < static_cast<int>(m.routes()[static_cast<std::size_t>(route)].blocks.size())) {
      next = m.routes()[static_cast<std::size_t>(route)].blocks[static_cast<std::size_t>(pos + 1)];
      next_route = route;
    } else {
      for (int r : m.routes_from(cur, d)) {
        const Route& cand = m.routes()[static_cast<std::size_t>(r)];
        if (s.locks[static_cast<std::size_t>(r)].locked &&
            s.aspects[static_cast<std::size_t>(cand.entry_point)] == Aspect::kProceed) {
          next = cand.blocks.front();
          next_route = r;
          break;
        }
      }
      if (next == kNoBlock) {
        const auto& succ = m.block(cur).succ[index_of(d)];
        BlockIndex plain = kNoBlock;
        for (BlockIndex x : succ) {
          if (!m.is_route_entry(x, d)) {
            plain = x;
            break;
          }
        }
        if (plain == kNoBlock) break;
        const int dp = m.departure_point(cur, d);
        if (dp >= 0) {
          if (s.aspects[static_cast<std::size_t>(dp)] != Aspect::kProceed) break;
          passed = dp;
          next_route = m.control_points()[static_cast<std::size_t>(dp)].route;
        }
        next = plain;
      }
    }
    const int owner = s.block_owner[static_cast<std::size_t>(next)];
    if (owner >= 0 && owner != train) break;
    if (block_disrupted(s, next)) break;
    bool foreign_lock = false;
    for (int r : routes_of_block_[static_cast<std::size_t>(next)]) {
      foreign_lock = foreign_lock || (r != next_route && s.locks[static_cast<std::size_t>(r)].locked);
    }
    if (foreign_lock) break;

    const Block& nb = m.block(next);
    sc.targets.push_back({dist, nb.vmax_mps});
    sc.ahead.push_back(next);
    sc.route_at.push_back(next_route);
    sc.passed_departure.push_back(passed);
    dist += nb.length_m;
    cur = next;
    route = next_route;
    pos = position_in(route, cur);
    if (pos < 0) route = -1;
    if (stop_at_platforms && nb.is_platform && t.served_platform != next) break;
  }
  sc.authority = std::min(dist, params_.lookahead_m);
  return sc;
}

double Simulator::movement_authority(const SimState& s, int train) const {
  if (train < 0 || train >= static_cast<int>(s.trains.size())) {
    throw Error(ErrorCode::kInvalidArgument, "unknown train " + std::to_string(train));
  }
  if (!s.trains[static_cast<std::size_t>(train)].in_service()) return 0.0;
  return scan(s, train, false).authority;
}

int Simulator::train_ready_at(const SimState& s, BlockIndex platform) const {
  const int owner = s.block_owner[static_cast<std::size_t>(platform)];
  if (owner < 0) return -1;
  const TrainState& t = s.trains[static_cast<std::size_t>(owner)];
  if (t.head() != platform || t.served_platform != platform || t.velocity_mps != 0.0) return -1;
  if (t.phase != TrainPhase::kHeld && t.phase != TrainPhase::kReversedPending) return -1;
  return owner;
}

void Simulator::rebuild_tail(SimState& s, TrainState& t) const {
  double covered = t.offset_m;
  std::size_t keep_from = t.path.size() - 1;
  for (std::size_t k = t.path.size() - 1; k-- > 0;) {
    if (covered >= t.length_m) break;
    keep_from = k;
    covered += model_->block(t.path[k]).length_m;
  }
  for (std::size_t k = 0; k < keep_from; ++k) {
    auto& owner = s.block_owner[static_cast<std::size_t>(t.path[k])];
    if (owner == t.id) owner = -1;
  }
  t.path.erase(t.path.begin(), t.path.begin() + static_cast<std::ptrdiff_t>(keep_from));
}

void Simulator::move_train(SimState& s, int train, std::vector<Event>& events) const {
  const auto& m = *model_;
  TrainState& t = s.trains[static_cast<std::size_t>(train)];
  if (!t.in_service()) return;
  const BlockIndex head_before = t.head();
  const Block& hb = m.block(head_before);

  if (t.phase == TrainPhase::kDwelling) {
    if (hb.is_platform) {
      board_waiting(t.onboard, t.capacity, t.direction, s.passengers.stations[static_cast<std::size_t>(hb.station)]);
    }
    if (--t.dwell_remaining_s <= 0) t.phase = TrainPhase::kHeld;
    return;
  }

  Scan sc = scan(s, train, true);
  const bool standing_at_platform =
      t.velocity_mps == 0.0 && hb.is_platform && t.served_platform == head_before;
  if (standing_at_platform && sc.authority <= hb.length_m - t.offset_m + 1e-9) {
    if (t.phase == TrainPhase::kHeld || t.phase == TrainPhase::kReversedPending) {
      board_waiting(t.onboard, t.capacity, t.direction, s.passengers.stations[static_cast<std::size_t>(hb.station)]);
    }
    return;
  }

  double vmax_here = std::numeric_limits<double>::infinity();
  for (BlockIndex b : t.path) vmax_here = std::min(vmax_here, m.block(b).vmax_mps);
  const KinematicResult k = kinematic_step(t.velocity_mps, sc.authority, vmax_here, sc.targets, params_);

  double remaining = k.displacement_m;
  std::size_t idx = 0;
  while (remaining > 0.0) {
    const double room = m.block(t.head()).length_m - t.offset_m;
    if (remaining <= room + 1e-9 || idx >= sc.ahead.size()) {
      t.offset_m = std::min(t.offset_m + remaining, m.block(t.head()).length_m);
      break;
    }
    remaining -= room;
    const BlockIndex next = sc.ahead[idx];
    if (sc.passed_departure[idx] >= 0) {
      s.aspects[static_cast<std::size_t>(sc.passed_departure[idx])] = Aspect::kStop;
    }
    const int r = sc.route_at[idx];
    if (r >= 0 && r != t.active_route) {
      const Route& route = m.routes()[static_cast<std::size_t>(r)];
      if (route.junction >= 0) s.aspects[static_cast<std::size_t>(route.entry_point)] = Aspect::kStop;
      auto& lock = s.locks[static_cast<std::size_t>(r)];
      if (lock.locked && lock.user < 0) lock.user = train;
    }
    t.active_route = r;
    t.path.push_back(next);
    s.block_owner[static_cast<std::size_t>(next)] = train;
    t.offset_m = 0.0;
    ++idx;
  }
  t.velocity_mps = k.velocity_mps;
  rebuild_tail(s, t);

  for (std::size_t r = 0; r < s.locks.size(); ++r) {
    auto& lock = s.locks[r];
    if (!lock.locked || lock.user != train) continue;
    bool inside = false;
    for (BlockIndex b : m.routes()[r].blocks) inside = inside || occupies(t, b);
    if (!inside) {
      lock = {};
      events.push_back({s.clock, EventKind::kRelease, train, m.routes()[r].station, kNoBlock, m.routes()[r].id});
    }
  }

  const bool moved = k.displacement_m > 0.0 || k.velocity_mps > 0.0;
  if (moved && (t.phase == TrainPhase::kHeld || t.phase == TrainPhase::kReversedPending)) {
    events.push_back({s.clock, EventKind::kDepart, train, hb.station, head_before, {}});
  }
  if (moved) t.phase = TrainPhase::kRunning;

  const BlockIndex head = t.head();
  const Block& nb = m.block(head);
  const bool at_end = t.offset_m >= nb.length_m - 1e-6;
  if (t.velocity_mps == 0.0 && at_end && nb.is_platform && t.served_platform != head) {
    t.served_platform = head;
    auto& queue = s.passengers.stations[static_cast<std::size_t>(nb.station)];
    ExchangeResult ex = exchange_at_platform(t.onboard, t.capacity, t.direction, nb.station, queue);
    s.passengers.arrived += ex.alighted;
    t.dwell_remaining_s = params_.base_dwell_s;
    t.phase = params_.base_dwell_s > 0 ? TrainPhase::kDwelling : TrainPhase::kHeld;
    events.push_back({s.clock, EventKind::kArrive, train, nb.station, head, {}});
  } else if (t.velocity_mps == 0.0 && at_end && m.is_depot_block(head) && m.is_dead_end(head, t.direction)) {
    for (BlockIndex b : t.path) {
      if (s.block_owner[static_cast<std::size_t>(b)] == train) s.block_owner[static_cast<std::size_t>(b)] = -1;
    }
    for (std::size_t r = 0; r < s.locks.size(); ++r) {
      if (s.locks[r].locked && s.locks[r].user == train) {
        s.locks[r] = {};
        events.push_back({s.clock, EventKind::kRelease, train, m.routes()[r].station, kNoBlock, m.routes()[r].id});
      }
    }
    // Passengers detrain at the last platform before stabling.
    if (t.served_platform != kNoBlock && !t.onboard.empty()) {
      const int station = m.block(t.served_platform).station;
      for (auto& g : t.onboard) {
        if (g.destination == station) {
          s.passengers.arrived += g.count;
          continue;
        }
        g.origin = station;
        enqueue_group(m, s.passengers, g);
      }
      t.onboard.clear();
    }
    t.phase = TrainPhase::kInDepot;
    events.push_back({s.clock, EventKind::kDepot, train, -1, head, {}});
  }

  const bool stopped = t.in_service() && t.phase == TrainPhase::kRunning && t.velocity_mps == 0.0 &&
                       !m.block(t.head()).is_platform;
  if (stopped != t.stopped_between_stations) {
    events.push_back({s.clock,
                      stopped ? EventKind::kStopBetweenStationsBegin : EventKind::kStopBetweenStationsEnd, train, -1,
                      t.head(), {}});
    t.stopped_between_stations = stopped;
  }
}

void Simulator::apply(SimState& s, const Command& c, std::vector<Event>& events) const {
  const auto& m = *model_;
  try {
    if (const auto* sig = std::get_if<SetSignal>(&c)) {
      set_signal(s, sig->point, sig->aspect);
    } else if (const auto* req = std::get_if<RequestRoute>(&c)) {
      RouteDecision d = request_route(s, req->route);
      const Route& r = m.routes()[static_cast<std::size_t>(req->route)];
      if (d.granted) {
        events.push_back({s.clock, EventKind::kLock, -1, r.station, kNoBlock, r.id});
      } else {
        events.push_back({s.clock, EventKind::kReject, -1, r.station, kNoBlock, r.id + " denied: " + d.reason});
      }
    } else if (const auto* rel = std::get_if<ReleaseRoute>(&c)) {
      if (release_route(s, rel->route)) {
        const Route& r = m.routes()[static_cast<std::size_t>(rel->route)];
        events.push_back({s.clock, EventKind::kRelease, -1, r.station, kNoBlock, r.id});
      }
    } else if (const auto* rev = std::get_if<ReverseTrain>(&c)) {
      reverse_train(s, rev->train, &events);
    }
  } catch (const Error& e) {
    events.push_back({s.clock, EventKind::kReject, -1, -1, kNoBlock, e.what()});
  }
}

std::vector<Event> Simulator::step(SimState& s, std::span<const Command> commands) const {
  std::vector<Event> events;
  for (const auto& c : commands) apply(s, c, events);
  for (const auto& d : s.disruptions) {
    if (s.clock == d.start_s) events.push_back({s.clock, EventKind::kDisruptionBegin, -1, -1, d.blocks.front(), {}});
    if (s.clock == d.start_s + d.duration_s) {
      events.push_back({s.clock, EventKind::kDisruptionEnd, -1, -1, d.blocks.front(), {}});
    }
  }
  for (std::size_t i = 0; i < s.trains.size(); ++i) move_train(s, static_cast<int>(i), events);

  for (auto& g : generate_arrivals(*od_, s.clock, 1, s.passengers)) {
    s.passengers.generated += g.count;
    enqueue_group(*model_, s.passengers, g);
  }
  for (std::size_t st = 0; st < s.passengers.stations.size(); ++st) {
    if (!s.passengers.stations[st].outside.empty()) admit_outside(*model_, s.passengers, static_cast<int>(st));
  }
  ++s.clock;
  return events;
}

PassengerAccounting Simulator::accounting(const SimState& s) const {
  PassengerAccounting a;
  a.generated = s.passengers.generated;
  a.arrived = s.passengers.arrived;
  for (const auto& st : s.passengers.stations) a.waiting += st.inside + st.outside_count;
  for (const auto& t : s.trains) a.onboard += onboard_count(t.onboard);
  return a;
}

}  // namespace railsim
