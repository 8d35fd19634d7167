#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <string_view>
#include <vector>

#include "railsim/route.hpp"

namespace railsim {

using Seconds = std::int64_t;

struct PassengerGroup {
  int count = 0;
  int origin = -1;
  int destination = -1;
  Seconds created_at = 0;
};

struct OdRecord {
  int origin = -1;
  int destination = -1;
  Seconds bucket_start_s = 0;
  double rate_pps = 0.0;
};

// Piecewise-constant origin-destination arrival rates. A pair's rate holds
// from its bucket start until that pair's next bucket start; pairs without
// records are zero.
class OdMatrix {
 public:
  OdMatrix() = default;
  OdMatrix(int stations, std::vector<OdRecord> records);

  int stations() const { return stations_; }
  double rate(int origin, int destination, Seconds t) const;
  const std::vector<OdRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

 private:
  int stations_ = 0;
  std::vector<OdRecord> records_;
  // per pair: (start, rate) sorted by start
  std::vector<std::vector<std::pair<Seconds, double>>> buckets_;
};

OdMatrix parse_od_csv(std::string_view text, const RouteModel& model);

struct StationQueues {
  std::array<std::deque<PassengerGroup>, 2> platform;  // by Direction
  std::deque<PassengerGroup> outside;
  int inside = 0;  // persons waiting on platforms
  int outside_count = 0;
};

struct PassengerAccounting {
  std::int64_t generated = 0;
  std::int64_t waiting = 0;
  std::int64_t onboard = 0;
  std::int64_t arrived = 0;

  bool conserved() const { return generated == waiting + onboard + arrived; }
  bool operator==(const PassengerAccounting&) const = default;
};

struct PassengerWorld {
  std::vector<StationQueues> stations;
  std::vector<double> accumulators;  // origin * n + destination
  std::int64_t generated = 0;
  std::int64_t arrived = 0;
  bool stochastic = false;
  std::mt19937_64 rng;

  static PassengerWorld create(const RouteModel& model, bool stochastic, std::uint64_t seed);
};

// Deterministic fractional accumulation (or seeded Poisson draws when the
// world is stochastic) of new groups for the interval [t, t + dt).
std::vector<PassengerGroup> generate_arrivals(const OdMatrix& od, Seconds t, Seconds dt, PassengerWorld& world);

// Queues a group at its origin station in the direction of its destination,
// spilling to the outside queue when the station is full.
void enqueue_group(const RouteModel& model, PassengerWorld& world, PassengerGroup group);
// Moves groups from outside into the station as capacity frees up.
void admit_outside(const RouteModel& model, PassengerWorld& world, int station);

struct ExchangeResult {
  int alighted = 0;
  int boarded = 0;
};

// Alight everyone destined for `station`, then board FIFO within remaining capacity.
ExchangeResult exchange_at_platform(std::vector<PassengerGroup>& onboard, int capacity, Direction direction,
                                    int station, StationQueues& queue);
// Board only (no alighting), used while a train keeps standing at a platform.
int board_waiting(std::vector<PassengerGroup>& onboard, int capacity, Direction direction, StationQueues& queue);
// After a reversal: groups no longer ahead leave the train and queue again.
int alight_not_ahead(const RouteModel& model, PassengerWorld& world, std::vector<PassengerGroup>& onboard,
                     Direction new_direction, int station);

int onboard_count(const std::vector<PassengerGroup>& onboard);
// onboard / capacity; throws Error(kInvalidArgument) on zero capacity.
double congestion(int onboard, int capacity);

inline bool destination_ahead(int station, int destination, Direction d) {
  return d == Direction::kUp ? destination > station : destination < station;
}

}  // namespace railsim
