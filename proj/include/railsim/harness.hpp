#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "railsim/env.hpp"
#include "railsim/ppo.hpp"

namespace railsim {

struct Scenario {
  Seconds sim_start = 0;
  Seconds horizon_s = 3600;
  std::vector<Disruption> disruptions;
  std::uint64_t fingerprint = 0;
};

// {"sim_start", "horizon_s", "disruptions": [{"blocks", "start", "duration_s"}]}; times are seconds or "HH:MM:SS".
Scenario parse_scenario(std::string_view json_text, const RouteModel& model);

enum class ControllerKind { kTimetableOnly, kAllProceed, kPolicy };

ControllerKind parse_controller(std::string_view name);
std::string_view to_string(ControllerKind c);

struct RunOptions {
  ControllerKind controller = ControllerKind::kTimetableOnly;
  std::shared_ptr<const PolicyParams> policy;  // required for kPolicy
  bool greedy = true;
  std::uint64_t seed = 0;
  Seconds horizon_s = 0;  // 0 keeps the scenario's horizon
  bool stochastic_passengers = true;
  Seconds decision_interval_s = 60;
};

struct DisruptionSpan {
  Seconds start_s = 0;
  Seconds end_s = 0;
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const DisruptionSpan&) const = default;
};

struct StationMark {
  std::string name;
  double position = 0.0;

  bool operator==(const StationMark&) const = default;
};

struct RunRecord {
  std::string controller;
  std::uint64_t seed = 0;
  Seconds start_s = 0;
  Seconds end_s = 0;
  double line_length = 0.0;
  std::vector<StationMark> stations;
  std::vector<std::string> trains;
  // positions[k][i]: midpoint of train i at start_s + k; NaN while out of service.
  std::vector<std::vector<double>> positions;
  std::vector<Event> events;
  std::vector<DisruptionSpan> spans;
  RunAccumulators accumulators;
  std::uint64_t world_fingerprint = 0;
  std::uint64_t scenario_fingerprint = 0;
  double wall_ms = 0.0;  // informational; excluded from metrics
};

RunRecord run_scenario(std::shared_ptr<const World> world, const Scenario& scenario, const RunOptions& options);

std::string serialize_record(const RunRecord& r);
RunRecord parse_record(std::string_view json_text);

struct SegmentRate {
  std::string from;
  std::string to;
  double up_per_hour = 0.0;
  double down_per_hour = 0.0;
};

struct Metrics {
  std::int64_t arrived = 0;
  double stop_seconds = 0.0;
  std::int64_t stop_events = 0;
  double mean_deviation = 0.0;
  std::vector<SegmentRate> trains_per_hour;
};

// Stop time is reconstructed from the stop begin/end events; stops still open at the end run to end_s.
Metrics compute_metrics(const RunRecord& r);
std::string metrics_json(const Metrics& m);

struct SvgStyle {
  int width = 1200;
  int height = 640;
  int margin = 60;
  double train_stroke = 1.2;
  double disruption_stroke = 4.0;
  bool title = true;
};

std::string render_time_space_svg(const RunRecord& r, const SvgStyle& style = {});

struct CompareReport {
  Metrics baseline;
  Metrics candidate;
  double stop_seconds_delta_pct = 0.0;
  double stop_events_delta_pct = 0.0;
  double arrived_delta_pct = 0.0;
  double deviation_delta_pct = 0.0;
};

// Throws Error(kIncompatible) unless both records come from the same world and scenario.
CompareReport compare(const RunRecord& baseline, const RunRecord& candidate);
std::string compare_json(const CompareReport& c);
std::string compare_table(const CompareReport& c);

// (c - b) / b in percent; 0 when both are 0, +/-100 when only b is 0.
double percent_delta(double b, double c);

}  // namespace railsim
