#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "railsim/env.hpp"
#include "railsim/io.hpp"
#include "railsim/route.hpp"
#include "railsim/sim.hpp"

#ifndef RAILSIM_FIXTURE_DIR
#define RAILSIM_FIXTURE_DIR "fixtures"
#endif

namespace testing {

inline std::string fixture(const std::string& name) {
  return std::string(RAILSIM_FIXTURE_DIR) + "/desk_line/" + name;
}

inline std::shared_ptr<const railsim::World> desk_world() {
  static std::shared_ptr<const railsim::World> w = railsim::World::load_files(
      fixture("route.json"), fixture("timetable.csv"), fixture("od.csv"));
  return w;
}

// Two stations joined by a straight up track A -> L1..L5 -> B and a single down block B -> M -> A.
// Lengths: L1 1000, L2 800, L3 600, L4 400, L5 500.
inline const char* kStraightLine = R"({
  "stations": [
    {"id": "A", "platforms": [{"id": "1", "block": "PA", "capacity": 200}]},
    {"id": "B", "platforms": [{"id": "1", "block": "PB", "capacity": 200}]}
  ],
  "blocks": [
    {"id": "PA", "length_m": 200, "vmax_mps": 20, "platform": true, "succ_up": ["L1"]},
    {"id": "L1", "length_m": 1000, "vmax_mps": 25, "succ_up": ["L2"]},
    {"id": "L2", "length_m": 800, "vmax_mps": 25, "succ_up": ["L3"]},
    {"id": "L3", "length_m": 600, "vmax_mps": 25, "succ_up": ["L4"]},
    {"id": "L4", "length_m": 400, "vmax_mps": 25, "succ_up": ["L5"]},
    {"id": "L5", "length_m": 500, "vmax_mps": 25, "succ_up": ["PB"]},
    {"id": "PB", "length_m": 200, "vmax_mps": 20, "platform": true, "succ_down": ["M"]},
    {"id": "M", "length_m": 3300, "vmax_mps": 25, "succ_down": ["PA"]}
  ],
  "junctions": []
})";

struct Line {
  railsim::RouteModel model;
  railsim::OdMatrix od;
  std::unique_ptr<railsim::Simulator> sim;

  explicit Line(const char* text) : model(railsim::parse_route_config(text)) {
    od = railsim::OdMatrix(static_cast<int>(model.stations().size()), {});
    sim = std::make_unique<railsim::Simulator>(model, od, railsim::SimParams{});
  }
  railsim::BlockIndex block(const char* id) const { return *model.find_block(id); }
};

inline railsim::TrainPlacement running_at(railsim::BlockIndex b, double offset, double length = 100.0) {
  railsim::TrainPlacement p;
  p.block = b;
  p.offset_m = offset;
  p.length_m = length;
  p.at_platform_stop = false;
  return p;
}

struct SafetyReport {
  long exclusivity = 0;
  long overspeed = 0;
  long conflicting_locks = 0;
  long owner_mismatch = 0;
};

inline void check_safety(const railsim::RouteModel& m, const railsim::SimState& s, SafetyReport& rep) {
  std::vector<int> seen(m.blocks().size(), -1);
  for (const auto& t : s.trains) {
    if (!t.in_service()) continue;
    double limit = 1e300;
    for (railsim::BlockIndex b : t.path) {
      auto& who = seen[static_cast<std::size_t>(b)];
      if (who >= 0 && who != t.id) ++rep.exclusivity;
      who = t.id;
      limit = std::min(limit, m.block(b).vmax_mps);
      if (s.block_owner[static_cast<std::size_t>(b)] != t.id) ++rep.owner_mismatch;
    }
    if (t.velocity_mps > limit + 1e-9) ++rep.overspeed;
  }
  for (std::size_t r = 0; r < m.routes().size(); ++r) {
    if (!s.locks[r].locked) continue;
    for (int c : m.routes()[r].conflicts) {
      if (s.locks[static_cast<std::size_t>(c)].locked) ++rep.conflicting_locks;
    }
  }
}

// Distance the head travelled from (old head block, old offset) along the new path.
inline double head_displacement(const railsim::RouteModel& m, railsim::BlockIndex old_head, double old_offset,
                                const railsim::TrainState& now) {
  auto it = std::find(now.path.begin(), now.path.end(), old_head);
  if (it == now.path.end()) return -1.0;
  if (it + 1 == now.path.end()) return now.offset_m - old_offset;
  double d = m.block(old_head).length_m - old_offset;
  for (auto k = it + 1; k + 1 != now.path.end(); ++k) d += m.block(*k).length_m;
  return d + now.offset_m;
}

struct Punctuality {
  long matched = 0;
  long missing = 0;
  long stop_events = 0;
  railsim::Seconds worst = 0;
};

// Timetable agent alone, no disruption, from the start of service for `horizon` seconds.
// The k-th arrival of a train is matched with its (k+1)-th timetable entry.
inline Punctuality punctuality(const std::shared_ptr<const railsim::World>& w, railsim::Seconds horizon) {
  railsim::EpisodeSpec spec;
  spec.start_s = w->service_start();
  spec.horizon_s = horizon;
  spec.timetable_only = true;
  railsim::Episode ep(w, spec);
  std::vector<std::vector<railsim::Seconds>> arrivals(w->placements().size());
  Punctuality p;
  while (!ep.done()) {
    ep.advance(3600, [&](const railsim::SimState&, const std::vector<railsim::Event>& events) {
      for (const auto& e : events) {
        if (e.kind == railsim::EventKind::kArrive) arrivals[static_cast<std::size_t>(e.train)].push_back(e.t);
        if (e.kind == railsim::EventKind::kStopBetweenStationsBegin) ++p.stop_events;
      }
    });
  }
  const auto names = w->timetable().trains();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto entries = w->timetable().entries_of(names[i]);
    for (std::size_t k = 1; k < entries.size(); ++k) {
      if (entries[k]->arrive_s >= spec.start_s + horizon - 10) break;
      if (k - 1 >= arrivals[i].size()) {
        ++p.missing;
        continue;
      }
      ++p.matched;
      const railsim::Seconds dev = arrivals[i][k - 1] - entries[k]->arrive_s;
      p.worst = std::max(p.worst, dev < 0 ? -dev : dev);
    }
  }
  return p;
}

}  // namespace testing
