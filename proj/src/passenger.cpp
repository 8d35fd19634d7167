#include "railsim/passenger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "railsim/error.hpp"
#include "railsim/io.hpp"

namespace railsim {

OdMatrix::OdMatrix(int stations, std::vector<OdRecord> records)
    : stations_(stations), records_(std::move(records)) {
  buckets_.assign(static_cast<std::size_t>(stations_ * stations_), {});
  for (const auto& r : records_) {
    if (r.origin < 0 || r.origin >= stations_ || r.destination < 0 || r.destination >= stations_) {
      throw Error(ErrorCode::kInvalidArgument, "od record references an unknown station");
    }
    if (!(r.rate_pps >= 0.0) || !std::isfinite(r.rate_pps)) {
      throw Error(ErrorCode::kInvalidArgument, "od rate must be finite and nonnegative");
    }
    if (r.origin == r.destination && r.rate_pps != 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "od rate from a station to itself must be zero");
    }
    buckets_[static_cast<std::size_t>(r.origin * stations_ + r.destination)].emplace_back(r.bucket_start_s,
                                                                                         r.rate_pps);
  }
  for (auto& b : buckets_) std::sort(b.begin(), b.end());
}

double OdMatrix::rate(int origin, int destination, Seconds t) const {
  if (origin == destination || buckets_.empty()) return 0.0;
  const auto& b = buckets_[static_cast<std::size_t>(origin * stations_ + destination)];
  auto it = std::upper_bound(b.begin(), b.end(), std::make_pair(t, std::numeric_limits<double>::infinity()));
  if (it == b.begin()) return 0.0;
  return std::prev(it)->second;
}

OdMatrix parse_od_csv(std::string_view text, const RouteModel& model) {
  std::vector<OdRecord> records;
  auto rows = parse_csv(text, {"origin", "destination", "bucket_start_s", "rate_pps"});
  for (const auto& row : rows) {
    auto o = model.find_station(row.at("origin"));
    auto d = model.find_station(row.at("destination"));
    if (!o || !d) throw Error(ErrorCode::kDanglingReference, "od record names an unknown station");
    records.push_back({*o, *d, parse_int(row.at("bucket_start_s")), parse_double(row.at("rate_pps"))});
  }
  return OdMatrix(static_cast<int>(model.stations().size()), std::move(records));
}

PassengerWorld PassengerWorld::create(const RouteModel& model, bool stochastic, std::uint64_t seed) {
  PassengerWorld w;
  const auto n = model.stations().size();
  w.stations.assign(n, {});
  w.accumulators.assign(n * n, 0.0);
  w.stochastic = stochastic;
  w.rng.seed(seed);
  return w;
}

std::vector<PassengerGroup> generate_arrivals(const OdMatrix& od, Seconds t, Seconds dt, PassengerWorld& world) {
  if (dt <= 0) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  std::vector<PassengerGroup> out;
  const int n = od.stations();
  if (od.empty()) return out;
  for (int o = 0; o < n; ++o) {
    for (int d = 0; d < n; ++d) {
      if (o == d) continue;
      const double rate = od.rate(o, d, t);
      if (rate <= 0.0) continue;
      int count = 0;
      if (world.stochastic) {
        std::poisson_distribution<int> draw(rate * static_cast<double>(dt));
        count = draw(world.rng);
      } else {
        double& acc = world.accumulators[static_cast<std::size_t>(o * n + d)];
        acc += rate * static_cast<double>(dt);
        // Guard against 2.9999999 after repeated 0.3 additions.
        const double whole = std::floor(acc + 1e-9);
        count = static_cast<int>(whole);
        acc -= whole;
        if (acc < 0.0) acc = 0.0;
      }
      if (count > 0) out.push_back({count, o, d, t});
    }
  }
  return out;
}

namespace {

void insert_sorted(std::deque<PassengerGroup>& q, PassengerGroup g) {
  auto it = std::upper_bound(q.begin(), q.end(), g.created_at,
                             [](Seconds t, const PassengerGroup& x) { return t < x.created_at; });
  q.insert(it, g);
}

}  // namespace

void enqueue_group(const RouteModel& model, PassengerWorld& world, PassengerGroup group) {
  auto& st = world.stations[static_cast<std::size_t>(group.origin)];
  const int capacity = model.stations()[static_cast<std::size_t>(group.origin)].capacity;
  const Direction dir = group.destination > group.origin ? Direction::kUp : Direction::kDown;
  const int room = std::max(0, capacity - st.inside);
  // Anyone already queued outside goes first.
  const int fit = st.outside.empty() ? std::min(room, group.count) : 0;
  if (fit > 0) {
    PassengerGroup in = group;
    in.count = fit;
    insert_sorted(st.platform[index_of(dir)], in);
    st.inside += fit;
  }
  if (group.count > fit) {
    PassengerGroup out = group;
    out.count = group.count - fit;
    insert_sorted(st.outside, out);
    st.outside_count += out.count;
  }
}

void admit_outside(const RouteModel& model, PassengerWorld& world, int station) {
  auto& st = world.stations[static_cast<std::size_t>(station)];
  const int capacity = model.stations()[static_cast<std::size_t>(station)].capacity;
  while (!st.outside.empty() && st.inside < capacity) {
    PassengerGroup& g = st.outside.front();
    const int fit = std::min(g.count, capacity - st.inside);
    PassengerGroup in = g;
    in.count = fit;
    const Direction dir = g.destination > g.origin ? Direction::kUp : Direction::kDown;
    insert_sorted(st.platform[index_of(dir)], in);
    st.inside += fit;
    st.outside_count -= fit;
    g.count -= fit;
    if (g.count == 0) st.outside.pop_front();
  }
}

int onboard_count(const std::vector<PassengerGroup>& onboard) {
  int n = 0;
  for (const auto& g : onboard) n += g.count;
  return n;
}

double congestion(int onboard, int capacity) {
  if (capacity <= 0) throw Error(ErrorCode::kInvalidArgument, "zero capacity");
  return static_cast<double>(onboard) / static_cast<double>(capacity);
}

int board_waiting(std::vector<PassengerGroup>& onboard, int capacity, Direction direction, StationQueues& queue) {
  int room = capacity - onboard_count(onboard);
  int boarded = 0;
  auto& q = queue.platform[index_of(direction)];
  while (room > 0 && !q.empty()) {
    PassengerGroup& g = q.front();
    const int take = std::min(room, g.count);
    PassengerGroup moved = g;
    moved.count = take;
    onboard.push_back(moved);
    g.count -= take;
    room -= take;
    boarded += take;
    if (g.count == 0) q.pop_front();
  }
  queue.inside -= boarded;
  return boarded;
}

ExchangeResult exchange_at_platform(std::vector<PassengerGroup>& onboard, int capacity, Direction direction,
                                    int station, StationQueues& queue) {
  ExchangeResult r;
  auto keep = std::stable_partition(onboard.begin(), onboard.end(),
                                    [&](const PassengerGroup& g) { return g.destination != station; });
  for (auto it = keep; it != onboard.end(); ++it) r.alighted += it->count;
  onboard.erase(keep, onboard.end());
  // Queues are split by direction on entry, so everything in this queue is ahead.
  r.boarded = board_waiting(onboard, capacity, direction, queue);
  return r;
}

int alight_not_ahead(const RouteModel& model, PassengerWorld& world, std::vector<PassengerGroup>& onboard,
                     Direction new_direction, int station) {
  int moved = 0;
  std::vector<PassengerGroup> keep;
  for (auto& g : onboard) {
    if (destination_ahead(station, g.destination, new_direction)) {
      keep.push_back(g);
      continue;
    }
    moved += g.count;
    if (g.destination == station) {
      world.arrived += g.count;
      continue;
    }
    PassengerGroup again = g;
    again.origin = station;
    enqueue_group(model, world, again);
  }
  onboard = std::move(keep);
  return moved;
}

}  // namespace railsim
