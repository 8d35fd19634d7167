#include <algorithm>
#include <cmath>

#include "railsim/env.hpp"
#include "railsim/error.hpp"
#include "railsim/io.hpp"

namespace railsim {

std::shared_ptr<const World> World::load(std::string_view route_json, std::string_view timetable_csv,
                                         std::string_view od_csv, SimParams params) {
  std::shared_ptr<World> w(new World());
  w->model_ = parse_route_config(route_json);
  w->geometry_ = std::make_unique<LineGeometry>(w->model_);
  w->timetable_ = parse_timetable_csv(timetable_csv, w->model_);
  w->rules_ = extract_operation_rules(w->timetable_, w->model_);
  w->od_ = parse_od_csv(od_csv, w->model_);
  w->sim_ = std::make_unique<Simulator>(w->model_, w->od_, params);
  w->agent_ = std::make_unique<TimetableAgent>(w->rules_, w->model_);
  w->placements_ = initial_placements(w->timetable_, w->model_);
  std::uint64_t h = fnv1a(route_json);
  h = fnv1a(timetable_csv, h);
  h = fnv1a(od_csv, h);
  w->fingerprint_ = h;

  if (w->timetable_.entries.empty()) {
    w->service_start_ = 0;
    w->service_end_ = 0;
  } else {
    Seconds first = std::numeric_limits<Seconds>::max();
    Seconds last = 0;
    for (const auto& e : w->timetable_.entries) {
      first = std::min(first, e.arrive_s);
      last = std::max(last, e.depart_s);
    }
    w->service_start_ = first;
    // Leave time for the last trains to reach the depot.
    w->service_end_ = last + 3600;
  }
  w->build_reference();
  return w;
}

std::shared_ptr<const World> World::load_files(const std::string& route, const std::string& timetable,
                                               const std::string& od, SimParams params) {
  return load(read_file(route), read_file(timetable), read_file(od), params);
}

void World::build_reference() {
  Snapshot cur{sim_->init(placements_, service_start_, 0, false), agent_->start()};
  const Seconds span = service_end_ - service_start_;
  planned_offset_.reserve(static_cast<std::size_t>(span) + 2);
  auto record_heads = [&] {
    planned_offset_.push_back(planned_heads_.size());
    for (const auto& t : cur.sim.trains) {
      if (t.in_service()) planned_heads_.push_back(t.head());
    }
  };
  for (Seconds k = 0; k <= span; ++k) {
    if (k % snapshot_every_ == 0) snapshots_.push_back(cur);
    record_heads();
    if (k == span) break;
    auto cmds = agent_->act(*sim_, cur.sim, cur.agent, nullptr);
    sim_->step(cur.sim, cmds);
  }
  planned_offset_.push_back(planned_heads_.size());
}

World::Snapshot World::snapshot_at(Seconds clock) const {
  clock = std::clamp(clock, service_start_, service_end_);
  const auto idx = static_cast<std::size_t>((clock - service_start_) / snapshot_every_);
  Snapshot s = snapshots_.at(std::min(idx, snapshots_.size() - 1));
  while (s.sim.clock < clock) {
    auto cmds = agent_->act(*sim_, s.sim, s.agent, nullptr);
    sim_->step(s.sim, cmds);
  }
  return s;
}

double World::deviation(const SimState& s) const {
  std::vector<int> diff;
  diff.assign(model_.blocks().size(), 0);
  const Seconds k = s.clock - service_start_;
  if (k >= 0 && k + 1 < static_cast<Seconds>(planned_offset_.size())) {
    for (std::size_t i = planned_offset_[static_cast<std::size_t>(k)];
         i < planned_offset_[static_cast<std::size_t>(k) + 1]; ++i) {
      ++diff[static_cast<std::size_t>(planned_heads_[i])];
    }
  }
  for (const auto& t : s.trains) {
    if (t.in_service()) --diff[static_cast<std::size_t>(t.head())];
  }
  double total = 0.0;
  for (int d : diff) total += std::abs(d);
  return total;
}

double train_midpoint(const World& world, const TrainState& t) {
  const auto& m = world.model();
  double back = 0.5 * t.length_m;
  double offset = t.offset_m;
  for (std::size_t k = t.path.size(); k-- > 0;) {
    const BlockIndex b = t.path[k];
    if (offset >= back || k == 0) {
      return world.geometry().position(b, std::max(0.0, offset - back), t.direction);
    }
    back -= offset;
    offset = m.block(t.path[k - 1]).length_m;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

Episode::Episode(std::shared_ptr<const World> world, EpisodeSpec spec)
    : world_(std::move(world)), spec_(std::move(spec)) {
  if (spec_.horizon_s <= 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be positive");
  setup();
}

void Episode::setup() {
  const World& w = *world_;
  World::Snapshot snap = w.snapshot_at(spec_.start_s);
  sim_ = std::move(snap.sim);
  agent_ = std::move(snap.agent);
  // Before service start the reference clamps; run idle until the requested clock.
  while (sim_.clock < spec_.start_s) w.sim().step(sim_, {});
  sim_.seed = spec_.seed;
  sim_.passengers.stochastic = spec_.stochastic_passengers;
  sim_.passengers.rng.seed(spec_.seed);
  sim_.disruptions = spec_.disruptions;
  for (const auto& d : sim_.disruptions) {
    if (d.blocks.empty() || d.duration_s <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "disruption needs blocks and a positive duration");
    }
  }
  assignment_ = std::make_unique<ControlAssignment>(assign_control(w.model(), w.geometry(), sim_.disruptions));
  rb_ = std::make_unique<RbAgent>(w.model(), *assignment_, w.sim().params().base_dwell_s);
  rb_state_ = rb_->start();
  acc_ = {};
  acc_.generated = sim_.passengers.generated;
  acc_.arrived = sim_.passengers.arrived;
  acc_.arrived_at_start = sim_.passengers.arrived;
  arrived_at_.assign(sim_.trains.size(), -1);
}

void Episode::latch(std::span<const int> macro_actions) { rb_->latch(rb_state_, macro_actions); }

std::vector<Event> Episode::take_refusals() { return std::exchange(refusals_, {}); }

TransitionAggregates Episode::advance(Seconds seconds, const Observer& observer) {
  const World& w = *world_;
  const Simulator& sim = w.sim();
  TransitionAggregates agg;
  const std::int64_t arrived_before = sim_.passengers.arrived;
  Seconds n = 0;
  std::vector<Event> extra;
  for (; n < seconds && !done(); ++n) {
    extra.clear();
    auto cmds = w.timetable_agent().act(sim, sim_, agent_, spec_.timetable_only ? nullptr : assignment_.get());
    if (!spec_.timetable_only && assignment_->any_rl()) {
      auto rb = rb_->act(sim, sim_, rb_state_, extra);
      cmds.insert(cmds.end(), rb.begin(), rb.end());
    }
    auto events = sim.step(sim_, cmds);
    if (!extra.empty()) {
      refusals_.insert(refusals_.end(), extra.begin(), extra.end());
      events.insert(events.begin(), extra.begin(), extra.end());
    }

    double speed = 0.0;
    int running = 0;
    double excess = 0.0;
    std::int64_t stopped = 0;
    for (const auto& t : sim_.trains) {
      if (!t.in_service()) continue;
      speed += t.velocity_mps;
      ++running;
      excess += std::max(0.0, congestion(onboard_count(t.onboard), t.capacity) - kCongestionThreshold);
      if (t.stopped_between_stations) ++stopped;
    }
    for (const auto& e : events) {
      if (e.kind == EventKind::kStopBetweenStationsBegin) ++acc_.stop_events;
      if (e.kind == EventKind::kArrive && e.train >= 0) arrived_at_[static_cast<std::size_t>(e.train)] = e.t;
    }
    const double dev = w.deviation(sim_);
    agg.mean_speed += running > 0 ? speed / running : 0.0;
    agg.excess_load += excess;
    agg.stop_seconds += static_cast<double>(stopped);
    agg.deviation += dev;
    acc_.stop_seconds += stopped;
    acc_.deviation_sum += dev;
    ++acc_.deviation_samples;
    ++acc_.seconds;
    if (observer) observer(sim_, events);
  }
  if (n > 0) {
    agg.mean_speed /= static_cast<double>(n);
    agg.excess_load /= static_cast<double>(n);
    agg.deviation /= static_cast<double>(n);
  }
  agg.arrived = static_cast<double>(sim_.passengers.arrived - arrived_before);
  acc_.generated = sim_.passengers.generated;
  acc_.arrived = sim_.passengers.arrived;
  return agg;
}

Seconds Episode::standing_time(std::size_t i) const {
  const auto& dp = assignment_->decision_points.at(i);
  const int owner = sim_.block_owner[static_cast<std::size_t>(dp.platform)];
  if (owner < 0) return -1;
  const TrainState& t = sim_.trains[static_cast<std::size_t>(owner)];
  if (t.head() != dp.platform || t.velocity_mps != 0.0) return -1;
  const Seconds since = arrived_at_[static_cast<std::size_t>(owner)];
  return since < 0 ? 0 : sim_.clock - since;
}

}  // namespace railsim
