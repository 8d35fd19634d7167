#pragma once

#include <vector>

#include "railsim/route.hpp"

namespace railsim {

// Maps every block onto a single line coordinate measured from the
// down-direction terminal. Up-track blocks keep their true length; the other
// track is stretched between the same station anchors; crossovers and depot
// spurs collapse to a point.
class LineGeometry {
 public:
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
  };

  explicit LineGeometry(const RouteModel& model);

  double line_length() const { return length_; }
  const Interval& block_interval(BlockIndex b) const { return blocks_[static_cast<std::size_t>(b)]; }
  const Interval& station_interval(int station) const { return stations_[static_cast<std::size_t>(station)]; }
  double station_position(int station) const;

  // Offset is measured from the block's entry boundary in direction `d`.
  double position(BlockIndex b, double offset, Direction d) const;

  // Direction of travel from station `from` towards station `to`.
  static Direction direction_between(int from, int to) { return to > from ? Direction::kUp : Direction::kDown; }

 private:
  const RouteModel* model_;
  std::vector<Interval> blocks_;
  std::vector<Interval> stations_;
  double length_ = 0.0;
};

}  // namespace railsim
