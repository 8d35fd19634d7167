#include <doctest.h>

#include <random>

#include "railsim/env.hpp"
#include "railsim/error.hpp"
#include "railsim/passenger.hpp"
#include "support.hpp"

using namespace railsim;

namespace {

int queued(const StationQueues& q, Direction d) {
  int n = 0;
  for (const auto& g : q.platform[index_of(d)]) n += g.count;
  return n;
}

}  // namespace

TEST_CASE("zero matrix generates nobody") {
  OdMatrix od(2, {{0, 1, 0, 0.0}, {1, 0, 0, 0.0}});
  testing::Line line(testing::kStraightLine);
  PassengerWorld w = PassengerWorld::create(line.model, false, 1);
  for (Seconds t = 0; t < 1000; ++t) CHECK(generate_arrivals(od, t, 1, w).empty());
}

TEST_CASE("fractional accumulation") {
  testing::Line line(testing::kStraightLine);
  SUBCASE("2 per second") {
    OdMatrix od(2, {{0, 1, 0, 2.0}});
    PassengerWorld w = PassengerWorld::create(line.model, false, 1);
    int total = 0;
    for (Seconds t = 0; t < 10; ++t) {
      for (const auto& g : generate_arrivals(od, t, 1, w)) total += g.count;
    }
    CHECK(total == 20);
  }
  SUBCASE("0.3 per second") {
    OdMatrix od(2, {{0, 1, 0, 0.3}});
    PassengerWorld w = PassengerWorld::create(line.model, false, 1);
    int total = 0;
    double acc = 0.0;
    int oracle = 0;
    for (Seconds t = 0; t < 10; ++t) {
      for (const auto& g : generate_arrivals(od, t, 1, w)) total += g.count;
      acc += 0.3;
      while (acc >= 1.0 - 1e-9) {
        acc -= 1.0;
        ++oracle;
      }
      CHECK(total == oracle);
    }
    CHECK(total == 3);
  }
  CHECK_THROWS_AS(
      [&] {
        PassengerWorld w = PassengerWorld::create(line.model, false, 1);
        generate_arrivals(OdMatrix(2, {}), 0, 0, w);
      }(),
      Error);
}

TEST_CASE("piecewise buckets") {
  OdMatrix od(2, {{0, 1, 100, 1.0}, {0, 1, 0, 0.5}, {1, 0, 50, 2.0}});
  CHECK(od.rate(0, 1, 0) == 0.5);
  CHECK(od.rate(0, 1, 99) == 0.5);
  CHECK(od.rate(0, 1, 100) == 1.0);
  CHECK(od.rate(1, 0, 49) == 0.0);
  CHECK(od.rate(1, 0, 1000000) == 2.0);
  CHECK_THROWS_AS(OdMatrix(2, {{0, 0, 0, 1.0}}), Error);
  CHECK_THROWS_AS(OdMatrix(2, {{0, 1, 0, -1.0}}), Error);
}

TEST_CASE("boarding is limited by capacity") {
  StationQueues q;
  for (int i = 0; i < 4; ++i) q.platform[0].push_back({30, 0, 1, i});
  q.inside = 120;
  std::vector<PassengerGroup> onboard{{30, 5, 9, 0}};
  const auto r = exchange_at_platform(onboard, 100, Direction::kUp, 0, q);
  CHECK(r.alighted == 0);
  CHECK(r.boarded == 70);
  CHECK(onboard_count(onboard) == 100);
  CHECK(queued(q, Direction::kUp) == 50);
  CHECK(q.inside == 50);
}

TEST_CASE("everyone destined here alights") {
  StationQueues q;
  std::vector<PassengerGroup> onboard{{12, 0, 3, 0}, {5, 1, 4, 2}, {7, 0, 3, 9}};
  const auto r = exchange_at_platform(onboard, 100, Direction::kUp, 3, q);
  CHECK(r.alighted == 19);
  REQUIRE(onboard.size() == 1);
  CHECK(onboard[0].destination == 4);
}

TEST_CASE("nobody boards against their direction") {
  StationQueues q;
  q.platform[index_of(Direction::kDown)].push_back({40, 2, 0, 0});
  q.inside = 40;
  std::vector<PassengerGroup> onboard;
  const auto r = exchange_at_platform(onboard, 100, Direction::kUp, 2, q);
  CHECK(r.boarded == 0);
  CHECK(q.inside == 40);
}

TEST_CASE("boarding is first come first served") {
  const auto w = testing::desk_world();
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    PassengerWorld pw = PassengerWorld::create(w->model(), false, 1);
    for (int i = 0; i < 30; ++i) {
      PassengerGroup g{1 + static_cast<int>(rng() % 20), 3, 4 + static_cast<int>(rng() % 4),
                       static_cast<Seconds>(rng() % 500)};
      enqueue_group(w->model(), pw, g);
    }
    auto& q = pw.stations[3];
    std::vector<PassengerGroup> onboard;
    const int cap = static_cast<int>(rng() % 300);
    const int waiting_before = queued(q, Direction::kUp);
    const int boarded = board_waiting(onboard, cap, Direction::kUp, q);
    CHECK(boarded == std::min(cap, waiting_before));
    Seconds latest_boarded = -1;
    for (const auto& g : onboard) latest_boarded = std::max(latest_boarded, g.created_at);
    for (const auto& g : q.platform[index_of(Direction::kUp)]) CHECK(g.created_at >= latest_boarded);
  }
}

TEST_CASE("overflow waits outside") {
  const auto w = testing::desk_world();
  const int cap = w->model().stations()[1].capacity;
  PassengerWorld pw = PassengerWorld::create(w->model(), false, 1);
  enqueue_group(w->model(), pw, {cap + 25, 1, 5, 0});
  CHECK(pw.stations[1].inside == cap);
  CHECK(pw.stations[1].outside_count == 25);
  std::vector<PassengerGroup> onboard;
  board_waiting(onboard, 40, Direction::kUp, pw.stations[1]);
  admit_outside(w->model(), pw, 1);
  CHECK(pw.stations[1].outside_count == 0);
  CHECK(pw.stations[1].inside == cap - 15);
}

TEST_CASE("congestion") {
  CHECK(congestion(0, 100) == 0.0);
  CHECK(congestion(100, 100) == 1.0);
  CHECK(congestion(150, 100) == 1.5);
  CHECK_THROWS_AS(congestion(1, 0), Error);
}

TEST_CASE("accounting starts at zero and is conserved") {
  const auto w = testing::desk_world();
  const SimState empty = w->sim().init({}, 0, 1);
  CHECK(w->sim().accounting(empty) == PassengerAccounting{});

  for (bool stochastic : {false, true}) {
    EpisodeSpec spec;
    spec.start_s = 7 * 3600 + 45 * 60;
    spec.horizon_s = 3600;
    spec.stochastic_passengers = stochastic;
    spec.seed = 3;
    spec.timetable_only = true;
    spec.disruptions.push_back({{*w->model().find_block("U34_1"), *w->model().find_block("D43_1")}, spec.start_s + 600,
                                900});
    Episode ep(w, spec);
    long bad = 0;
    long steps = 0;
    ep.advance(spec.horizon_s, [&](const SimState& s, const std::vector<Event>&) {
      bad += !w->sim().accounting(s).conserved();
      ++steps;
    });
    CHECK(steps == spec.horizon_s);
    CHECK(bad == 0);
    CHECK(w->sim().accounting(ep.state()).arrived > 0);
  }
}
