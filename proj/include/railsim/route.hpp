#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace railsim {

enum class Direction : std::uint8_t { kUp = 0, kDown = 1 };

constexpr Direction opposite(Direction d) {
  return d == Direction::kUp ? Direction::kDown : Direction::kUp;
}
constexpr int index_of(Direction d) { return static_cast<int>(d); }
std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view s);

using BlockIndex = std::int32_t;
inline constexpr BlockIndex kNoBlock = -1;

// ---------------------------------------------------------------------------
// Document form: exactly what the config file says, references by id.

struct PlatformSpec {
  std::string id;
  std::string block;
  int capacity = 0;

  bool operator==(const PlatformSpec&) const = default;
};

struct StationSpec {
  std::string id;
  std::string name;
  std::vector<PlatformSpec> platforms;
  bool can_turn_back = false;
  bool has_depot = false;

  bool operator==(const StationSpec&) const = default;
};

struct BlockSpec {
  std::string id;
  double length_m = 0.0;
  double vmax_mps = 0.0;
  std::vector<std::string> succ_up;
  std::vector<std::string> succ_down;
  bool platform = false;

  bool operator==(const BlockSpec&) const = default;
};

struct RouteSpec {
  std::string id;
  std::vector<std::string> blocks;
  std::string entry_signal;
  std::vector<std::string> conflicts;

  bool operator==(const RouteSpec&) const = default;
};

struct JunctionSpec {
  std::string id;
  std::vector<RouteSpec> routes;

  bool operator==(const JunctionSpec&) const = default;
};

// Stations are listed in line order, starting at the down-direction terminal.
struct RouteDocument {
  std::vector<StationSpec> stations;
  std::vector<BlockSpec> blocks;
  std::vector<JunctionSpec> junctions;

  bool operator==(const RouteDocument&) const = default;
};

struct Violation {
  std::string kind;    // e.g. "dangling reference", "duplicate id"
  std::string entity;  // offending id
  std::string detail;
};

std::string describe(const Violation& v);

// Syntax-level parse only; throws Error(kParse) with position on malformed text.
RouteDocument parse_route_document(std::string_view text);
std::string serialize_route_document(const RouteDocument& doc);

// Every invariant of the route model, checked on the document form so that
// dangling references can be reported instead of crashing an index lookup.
std::vector<Violation> validate_route(const RouteDocument& doc);

// ---------------------------------------------------------------------------
// Indexed, immutable model.

struct Block {
  std::string id;
  double length_m = 0.0;
  double vmax_mps = 0.0;
  std::array<std::vector<BlockIndex>, 2> succ;
  std::array<std::vector<BlockIndex>, 2> pred;
  bool is_platform = false;
  int station = -1;   // owning station for platform blocks
  int platform = -1;  // index into Station::platforms
};

struct Platform {
  std::string id;
  BlockIndex block = kNoBlock;
  int capacity = 0;
};

struct Station {
  std::string id;
  std::string name;
  std::vector<Platform> platforms;
  bool can_turn_back = false;
  bool has_depot = false;
  bool is_terminal = false;
  int capacity = 0;  // persons that fit inside, sum of platform capacities
};

enum class RouteKind : std::uint8_t {
  kTurnback,   // configured junction route crossing between tracks
  kDepot,      // configured junction route ending at a dead-end stabling block
  kDeparture,  // derived: platform exit up to the next platform
};

struct Route {
  std::string id;
  RouteKind kind = RouteKind::kTurnback;
  std::vector<BlockIndex> blocks;
  Direction direction = Direction::kUp;
  BlockIndex from_block = kNoBlock;  // block the train stands on when entering
  int station = -1;
  int junction = -1;                 // -1 for derived departure routes
  int entry_point = -1;              // ControlPoint index
  std::vector<int> conflicts;        // route indices, symmetric
};

struct Junction {
  std::string id;
  std::vector<int> routes;
};

enum class ControlKind : std::uint8_t { kDeparture = 0, kJunction = 1 };

struct ControlPoint {
  std::string id;
  ControlKind kind = ControlKind::kDeparture;
  int station = -1;
  Direction direction = Direction::kUp;
  BlockIndex block = kNoBlock;  // departure: platform block it guards the exit of
  int route = -1;               // departure: derived departure route; junction: first route using it
};

class RouteModel {
 public:
  static RouteModel build(const RouteDocument& doc);

  const RouteDocument& document() const { return doc_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Station>& stations() const { return stations_; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<Route>& routes() const { return routes_; }
  const std::vector<ControlPoint>& control_points() const { return points_; }

  const Block& block(BlockIndex b) const { return blocks_[static_cast<std::size_t>(b)]; }
  std::optional<BlockIndex> find_block(std::string_view id) const;
  std::optional<int> find_station(std::string_view id) const;
  std::optional<int> find_point(std::string_view id) const;
  std::optional<int> find_route(std::string_view id) const;
  // (station, platform id) lookup; returns the platform block.
  std::optional<BlockIndex> find_platform(int station, std::string_view platform_id) const;

  // Departure control point guarding the exit of `block` in direction `d`, or -1.
  int departure_point(BlockIndex block, Direction d) const;
  // Configured junction routes a train standing on `block` may take in direction `d`.
  const std::vector<int>& routes_from(BlockIndex block, Direction d) const;
  // Non-zero when `block` is the first block of some configured junction route in `d`.
  bool is_route_entry(BlockIndex block, Direction d) const;
  // Successors that are not the entry of a junction route.
  std::vector<BlockIndex> plain_successors(BlockIndex block, Direction d) const;
  bool is_dead_end(BlockIndex block, Direction d) const { return block_ref(block).succ[index_of(d)].empty(); }
  bool is_depot_block(BlockIndex block) const;

  // Departure points of a station in direction d (usually one).
  std::vector<int> departure_points(int station, Direction d) const;

 private:
  const Block& block_ref(BlockIndex b) const { return blocks_[static_cast<std::size_t>(b)]; }

  RouteDocument doc_;
  std::vector<Block> blocks_;
  std::vector<Station> stations_;
  std::vector<Junction> junctions_;
  std::vector<Route> routes_;
  std::vector<ControlPoint> points_;
  std::unordered_map<std::string, BlockIndex> block_ids_;
  std::unordered_map<std::string, int> station_ids_;
  std::unordered_map<std::string, int> point_ids_;
  std::unordered_map<std::string, int> route_ids_;
  std::vector<std::array<int, 2>> departure_point_of_;      // per block
  std::vector<std::array<std::vector<int>, 2>> routes_from_;  // per block
  std::vector<std::array<bool, 2>> route_entry_;             // per block
};

// parse + validate + build. Throws Error naming the first violation.
RouteModel parse_route_config(std::string_view text);

// Ordered by station position, then direction (up first), then kind (departure first), then id.
std::vector<ControlPoint> enumerate_control_points(const RouteModel& model);

std::string departure_point_id(std::string_view platform_block_id, Direction d);

}  // namespace railsim
