#include "railsim/route.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "railsim/error.hpp"

namespace railsim {

using nlohmann::json;

std::string_view to_string(Direction d) { return d == Direction::kUp ? "up" : "down"; }

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "up") return Direction::kUp;
  if (s == "down") return Direction::kDown;
  return std::nullopt;
}

std::string departure_point_id(std::string_view platform_block_id, Direction d) {
  std::string id = "dep:";
  id += platform_block_id;
  id += ':';
  id += to_string(d);
  return id;
}

std::string describe(const Violation& v) {
  std::string out = v.kind + ": " + v.entity;
  if (!v.detail.empty()) out += " (" + v.detail + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Document parse / serialize

namespace {

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kParse, where + ": missing key '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, where + "." + key + ": " + e.what());
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, where);
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw Error(ErrorCode::kParse, where + ": '" + key + "' must be an array");
  }
  return *it;
}

}  // namespace

RouteDocument parse_route_document(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse,
                "syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::kParse, "route config must be an object");

  RouteDocument doc;
  std::size_t i = 0;
  for (const auto& s : array_field(root, "stations", "route")) {
    const std::string where = "stations[" + std::to_string(i++) + "]";
    StationSpec st;
    st.id = field<std::string>(s, "id", where);
    st.name = optional_field<std::string>(s, "name", st.id, where);
    st.can_turn_back = optional_field<bool>(s, "can_turn_back", false, where);
    st.has_depot = optional_field<bool>(s, "has_depot", false, where);
    std::size_t k = 0;
    for (const auto& p : array_field(s, "platforms", where)) {
      const std::string pw = where + ".platforms[" + std::to_string(k++) + "]";
      st.platforms.push_back({field<std::string>(p, "id", pw), field<std::string>(p, "block", pw),
                              field<int>(p, "capacity", pw)});
    }
    doc.stations.push_back(std::move(st));
  }
  i = 0;
  for (const auto& b : array_field(root, "blocks", "route")) {
    const std::string where = "blocks[" + std::to_string(i++) + "]";
    BlockSpec bs;
    bs.id = field<std::string>(b, "id", where);
    bs.length_m = field<double>(b, "length_m", where);
    bs.vmax_mps = field<double>(b, "vmax_mps", where);
    bs.succ_up = optional_field<std::vector<std::string>>(b, "succ_up", {}, where);
    bs.succ_down = optional_field<std::vector<std::string>>(b, "succ_down", {}, where);
    bs.platform = optional_field<bool>(b, "platform", false, where);
    doc.blocks.push_back(std::move(bs));
  }
  i = 0;
  if (root.contains("junctions")) {
    for (const auto& j : array_field(root, "junctions", "route")) {
      const std::string where = "junctions[" + std::to_string(i++) + "]";
      JunctionSpec js;
      js.id = field<std::string>(j, "id", where);
      std::size_t k = 0;
      for (const auto& r : array_field(j, "routes", where)) {
        const std::string rw = where + ".routes[" + std::to_string(k++) + "]";
        RouteSpec rs;
        rs.id = field<std::string>(r, "id", rw);
        rs.blocks = field<std::vector<std::string>>(r, "blocks", rw);
        rs.entry_signal = field<std::string>(r, "entry_signal", rw);
        rs.conflicts = optional_field<std::vector<std::string>>(r, "conflicts", {}, rw);
        js.routes.push_back(std::move(rs));
      }
      doc.junctions.push_back(std::move(js));
    }
  }
  return doc;
}

std::string serialize_route_document(const RouteDocument& doc) {
  json root;
  root["stations"] = json::array();
  for (const auto& s : doc.stations) {
    json platforms = json::array();
    for (const auto& p : s.platforms) {
      platforms.push_back({{"id", p.id}, {"block", p.block}, {"capacity", p.capacity}});
    }
    root["stations"].push_back({{"id", s.id},
                                {"name", s.name},
                                {"platforms", platforms},
                                {"can_turn_back", s.can_turn_back},
                                {"has_depot", s.has_depot}});
  }
  root["blocks"] = json::array();
  for (const auto& b : doc.blocks) {
    root["blocks"].push_back({{"id", b.id},
                              {"length_m", b.length_m},
                              {"vmax_mps", b.vmax_mps},
                              {"succ_up", b.succ_up},
                              {"succ_down", b.succ_down},
                              {"platform", b.platform}});
  }
  root["junctions"] = json::array();
  for (const auto& j : doc.junctions) {
    json routes = json::array();
    for (const auto& r : j.routes) {
      routes.push_back({{"id", r.id},
                        {"blocks", r.blocks},
                        {"entry_signal", r.entry_signal},
                        {"conflicts", r.conflicts}});
    }
    root["junctions"].push_back({{"id", j.id}, {"routes", routes}});
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct DocIndex {
  std::unordered_map<std::string, const BlockSpec*> blocks;
  std::unordered_map<std::string, const RouteSpec*> routes;
  std::unordered_map<std::string, std::vector<std::string>> pred_up, pred_down;

  const std::vector<std::string>& succ(const BlockSpec& b, Direction d) const {
    return d == Direction::kUp ? b.succ_up : b.succ_down;
  }
};

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

// Direction in which `blocks` form a contiguous chain entered from some predecessor.
std::vector<Direction> route_directions(const DocIndex& ix, const RouteSpec& r) {
  std::vector<Direction> out;
  for (Direction d : {Direction::kUp, Direction::kDown}) {
    bool ok = !r.blocks.empty();
    for (std::size_t i = 0; ok && i + 1 < r.blocks.size(); ++i) {
      auto it = ix.blocks.find(r.blocks[i]);
      ok = it != ix.blocks.end() && contains(ix.succ(*it->second, d), r.blocks[i + 1]);
    }
    if (ok) {
      const auto& preds = d == Direction::kUp ? ix.pred_up : ix.pred_down;
      auto it = preds.find(r.blocks.front());
      ok = it != preds.end() && !it->second.empty();
    }
    if (ok) out.push_back(d);
  }
  return out;
}

}  // namespace

std::vector<Violation> validate_route(const RouteDocument& doc) {
  std::vector<Violation> out;
  auto add = [&](std::string kind, std::string entity, std::string detail = {}) {
    out.push_back({std::move(kind), std::move(entity), std::move(detail)});
  };

  DocIndex ix;
  for (const auto& b : doc.blocks) {
    if (!ix.blocks.emplace(b.id, &b).second) add("duplicate id", b.id, "block");
    if (!(b.length_m > 0.0)) add("nonpositive length", b.id);
    if (!(b.vmax_mps > 0.0)) add("nonpositive speed limit", b.id);
  }
  for (const auto& b : doc.blocks) {
    for (Direction d : {Direction::kUp, Direction::kDown}) {
      for (const auto& s : ix.succ(b, d)) {
        if (!ix.blocks.count(s)) {
          add("dangling reference", b.id, "successor " + s + " does not exist");
          continue;
        }
        (d == Direction::kUp ? ix.pred_up : ix.pred_down)[s].push_back(b.id);
      }
    }
  }

  std::set<std::string> station_ids;
  std::unordered_map<std::string, std::string> platform_owner;  // block -> station
  for (const auto& s : doc.stations) {
    if (!station_ids.insert(s.id).second) add("duplicate id", s.id, "station");
    if (s.platforms.empty()) add("station without platform", s.id);
    std::set<std::string> pids;
    for (const auto& p : s.platforms) {
      if (!pids.insert(p.id).second) add("duplicate id", s.id + "/" + p.id, "platform");
      if (p.capacity <= 0) add("nonpositive capacity", s.id + "/" + p.id);
      auto it = ix.blocks.find(p.block);
      if (it == ix.blocks.end()) {
        add("dangling reference", s.id + "/" + p.id, "platform block " + p.block + " does not exist");
        continue;
      }
      if (!it->second->platform) add("platform flag mismatch", p.block, "listed as platform but not flagged");
      auto [owner, inserted] = platform_owner.emplace(p.block, s.id);
      if (!inserted) add("platform block shared", p.block, owner->second + " and " + s.id);
    }
  }
  for (const auto& b : doc.blocks) {
    if (b.platform && !platform_owner.count(b.id)) add("orphan platform block", b.id);
  }

  std::set<std::string> junction_ids;
  std::set<std::string> signal_ids;
  for (const auto& j : doc.junctions) {
    if (!junction_ids.insert(j.id).second) add("duplicate id", j.id, "junction");
    for (const auto& r : j.routes) {
      if (!ix.routes.emplace(r.id, &r).second) add("duplicate id", r.id, "route");
    }
  }
  std::unordered_map<std::string, std::string> route_station;  // route -> station id
  for (const auto& j : doc.junctions) {
    for (const auto& r : j.routes) {
      if (r.blocks.empty()) add("empty route", r.id);
      if (r.entry_signal.empty()) add("missing entry signal", r.id);
      if (r.entry_signal.rfind("dep:", 0) == 0) add("reserved signal id", r.entry_signal, r.id);
      bool resolved = true;
      for (const auto& b : r.blocks) {
        if (!ix.blocks.count(b)) {
          add("dangling reference", r.id, "route block " + b + " does not exist");
          resolved = false;
        }
      }
      for (const auto& c : r.conflicts) {
        auto it = ix.routes.find(c);
        if (it == ix.routes.end()) {
          add("dangling reference", r.id, "conflicting route " + c + " does not exist");
        } else if (!contains(it->second->conflicts, r.id)) {
          add("asymmetric conflict", r.id, c + " does not list it back");
        } else if (c == r.id) {
          add("self conflict", r.id);
        }
      }
      if (!resolved || r.blocks.empty()) continue;
      auto dirs = route_directions(ix, r);
      if (dirs.empty()) {
        add("non-contiguous route", r.id);
        continue;
      }
      if (dirs.size() > 1) {
        add("ambiguous route direction", r.id);
        continue;
      }
      const auto& preds = dirs[0] == Direction::kUp ? ix.pred_up : ix.pred_down;
      std::string station;
      for (const auto& p : preds.at(r.blocks.front())) {
        if (auto it = platform_owner.find(p); it != platform_owner.end()) station = it->second;
      }
      if (station.empty()) {
        for (const auto& b : r.blocks) {
          if (auto it = platform_owner.find(b); it != platform_owner.end()) {
            station = it->second;
            break;
          }
        }
      }
      if (station.empty()) add("route not at a station", r.id);
      route_station[r.id] = station;
    }
  }

  // Per-direction acyclicity, ignoring edges that enter junction routes.
  std::unordered_map<std::string, std::array<bool, 2>> route_entry;
  for (const auto& j : doc.junctions) {
    for (const auto& r : j.routes) {
      if (r.blocks.empty() || !ix.blocks.count(r.blocks.front())) continue;
      for (Direction d : route_directions(ix, r)) route_entry[r.blocks.front()][index_of(d)] = true;
    }
  }
  for (Direction d : {Direction::kUp, Direction::kDown}) {
    std::unordered_map<std::string, int> color;  // 0 white, 1 grey, 2 black
    std::function<bool(const std::string&)> dfs = [&](const std::string& id) {
      color[id] = 1;
      for (const auto& s : ix.succ(*ix.blocks.at(id), d)) {
        if (!ix.blocks.count(s)) continue;
        if (auto it = route_entry.find(s); it != route_entry.end() && it->second[index_of(d)]) continue;
        int c = color[s];
        if (c == 1) return false;
        if (c == 0 && !dfs(s)) return false;
      }
      color[id] = 2;
      return true;
    };
    for (const auto& b : doc.blocks) {
      if (color[b.id] == 0 && !dfs(b.id)) {
        add("cycle", b.id, std::string(to_string(d)) + " successors form a cycle");
        break;
      }
    }
  }

  // Every platform reaches a dead end (terminal) in some direction.
  for (const auto& [block, station] : platform_owner) {
    bool reaches = false;
    for (Direction d : {Direction::kUp, Direction::kDown}) {
      std::unordered_set<std::string> seen{block};
      std::vector<std::string> stack{block};
      while (!stack.empty() && !reaches) {
        auto cur = stack.back();
        stack.pop_back();
        const auto& succ = ix.succ(*ix.blocks.at(cur), d);
        if (succ.empty() && cur != block) reaches = true;
        for (const auto& s : succ) {
          if (ix.blocks.count(s) && seen.insert(s).second) stack.push_back(s);
        }
      }
    }
    if (!reaches) add("disconnected platform", block, "no terminal reachable from " + station);
  }

  // Turnaround / depot stations need a matching junction route.
  for (const auto& s : doc.stations) {
    bool turnback = false, depot = false;
    for (const auto& j : doc.junctions) {
      for (const auto& r : j.routes) {
        auto it = route_station.find(r.id);
        if (it == route_station.end() || it->second != s.id) continue;
        const auto& last = r.blocks.back();
        const BlockSpec& lb = *ix.blocks.at(last);
        auto dirs = route_directions(ix, r);
        bool dead_end = !dirs.empty() && ix.succ(lb, dirs[0]).empty() && !lb.platform;
        (dead_end ? depot : turnback) = true;
      }
    }
    if (s.can_turn_back && !turnback) add("turnaround without junction route", s.id);
    if (s.has_depot && !depot) add("depot without route", s.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Indexed model

std::optional<BlockIndex> RouteModel::find_block(std::string_view id) const {
  auto it = block_ids_.find(std::string(id));
  if (it == block_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> RouteModel::find_station(std::string_view id) const {
  auto it = station_ids_.find(std::string(id));
  if (it == station_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> RouteModel::find_point(std::string_view id) const {
  auto it = point_ids_.find(std::string(id));
  if (it == point_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> RouteModel::find_route(std::string_view id) const {
  auto it = route_ids_.find(std::string(id));
  if (it == route_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<BlockIndex> RouteModel::find_platform(int station, std::string_view platform_id) const {
  if (station < 0 || station >= static_cast<int>(stations_.size())) return std::nullopt;
  for (const auto& p : stations_[static_cast<std::size_t>(station)].platforms) {
    if (p.id == platform_id) return p.block;
  }
  return std::nullopt;
}

int RouteModel::departure_point(BlockIndex block, Direction d) const {
  return departure_point_of_[static_cast<std::size_t>(block)][index_of(d)];
}

const std::vector<int>& RouteModel::routes_from(BlockIndex block, Direction d) const {
  return routes_from_[static_cast<std::size_t>(block)][index_of(d)];
}

bool RouteModel::is_route_entry(BlockIndex block, Direction d) const {
  return route_entry_[static_cast<std::size_t>(block)][index_of(d)];
}

std::vector<BlockIndex> RouteModel::plain_successors(BlockIndex block, Direction d) const {
  std::vector<BlockIndex> out;
  for (BlockIndex s : block_ref(block).succ[index_of(d)]) {
    if (!is_route_entry(s, d)) out.push_back(s);
  }
  return out;
}

bool RouteModel::is_depot_block(BlockIndex block) const {
  const Block& b = block_ref(block);
  if (b.is_platform) return false;
  for (const auto& route : routes_) {
    if (route.kind == RouteKind::kDepot && route.blocks.back() == block) return true;
  }
  return false;
}

std::vector<int> RouteModel::departure_points(int station, Direction d) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (p.kind == ControlKind::kDeparture && p.station == station && p.direction == d) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

RouteModel RouteModel::build(const RouteDocument& doc) {
  RouteModel m;
  m.doc_ = doc;
  const std::size_t nb = doc.blocks.size();
  m.blocks_.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    m.block_ids_.emplace(doc.blocks[i].id, static_cast<BlockIndex>(i));
  }
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& bs = doc.blocks[i];
    Block& b = m.blocks_[i];
    b.id = bs.id;
    b.length_m = bs.length_m;
    b.vmax_mps = bs.vmax_mps;
    b.is_platform = bs.platform;
    for (Direction d : {Direction::kUp, Direction::kDown}) {
      for (const auto& s : d == Direction::kUp ? bs.succ_up : bs.succ_down) {
        BlockIndex si = m.block_ids_.at(s);
        b.succ[index_of(d)].push_back(si);
        m.blocks_[static_cast<std::size_t>(si)].pred[index_of(d)].push_back(static_cast<BlockIndex>(i));
      }
    }
  }
  for (std::size_t si = 0; si < doc.stations.size(); ++si) {
    const auto& ss = doc.stations[si];
    Station st;
    st.id = ss.id;
    st.name = ss.name;
    st.can_turn_back = ss.can_turn_back;
    st.has_depot = ss.has_depot;
    st.is_terminal = si == 0 || si + 1 == doc.stations.size();
    for (std::size_t pi = 0; pi < ss.platforms.size(); ++pi) {
      const auto& ps = ss.platforms[pi];
      BlockIndex b = m.block_ids_.at(ps.block);
      st.platforms.push_back({ps.id, b, ps.capacity});
      st.capacity += ps.capacity;
      m.blocks_[static_cast<std::size_t>(b)].station = static_cast<int>(si);
      m.blocks_[static_cast<std::size_t>(b)].platform = static_cast<int>(pi);
    }
    m.station_ids_.emplace(st.id, static_cast<int>(si));
    m.stations_.push_back(std::move(st));
  }

  m.departure_point_of_.assign(nb, {-1, -1});
  m.routes_from_.assign(nb, {});
  m.route_entry_.assign(nb, {false, false});

  // Configured junction routes.
  std::vector<ControlPoint> points;
  std::unordered_map<std::string, int> signal_index;
  for (std::size_t ji = 0; ji < doc.junctions.size(); ++ji) {
    const auto& js = doc.junctions[ji];
    Junction j{js.id, {}};
    for (const auto& rs : js.routes) {
      Route r;
      r.id = rs.id;
      r.junction = static_cast<int>(ji);
      for (const auto& b : rs.blocks) r.blocks.push_back(m.block_ids_.at(b));
      // Direction: the one in which the chain is contiguous and entered from a predecessor.
      for (Direction d : {Direction::kUp, Direction::kDown}) {
        bool ok = !m.blocks_[static_cast<std::size_t>(r.blocks.front())].pred[index_of(d)].empty();
        for (std::size_t i = 0; ok && i + 1 < r.blocks.size(); ++i) {
          const auto& succ = m.blocks_[static_cast<std::size_t>(r.blocks[i])].succ[index_of(d)];
          ok = std::find(succ.begin(), succ.end(), r.blocks[i + 1]) != succ.end();
        }
        if (ok) {
          r.direction = d;
          break;
        }
      }
      const auto& preds = m.blocks_[static_cast<std::size_t>(r.blocks.front())].pred[index_of(r.direction)];
      r.from_block = preds.front();
      for (BlockIndex p : preds) {
        if (m.blocks_[static_cast<std::size_t>(p)].station >= 0) r.from_block = p;
      }
      r.station = m.blocks_[static_cast<std::size_t>(r.from_block)].station;
      if (r.station < 0) {
        for (BlockIndex b : r.blocks) {
          if (m.blocks_[static_cast<std::size_t>(b)].station >= 0) {
            r.station = m.blocks_[static_cast<std::size_t>(b)].station;
            break;
          }
        }
      }
      const Block& last = m.blocks_[static_cast<std::size_t>(r.blocks.back())];
      r.kind = (!last.is_platform && last.succ[index_of(r.direction)].empty()) ? RouteKind::kDepot
                                                                               : RouteKind::kTurnback;
      auto [it, inserted] = signal_index.emplace(rs.entry_signal, static_cast<int>(points.size()));
      if (inserted) {
        ControlPoint cp;
        cp.id = rs.entry_signal;
        cp.kind = ControlKind::kJunction;
        cp.station = r.station;
        cp.direction = r.direction;
        cp.block = r.from_block;
        cp.route = static_cast<int>(m.routes_.size());
        points.push_back(cp);
      }
      r.entry_point = it->second;
      m.route_ids_.emplace(r.id, static_cast<int>(m.routes_.size()));
      m.route_entry_[static_cast<std::size_t>(r.blocks.front())][index_of(r.direction)] = true;
      m.routes_from_[static_cast<std::size_t>(r.from_block)][index_of(r.direction)].push_back(
          static_cast<int>(m.routes_.size()));
      j.routes.push_back(static_cast<int>(m.routes_.size()));
      m.routes_.push_back(std::move(r));
    }
    m.junctions_.push_back(std::move(j));
  }
  for (std::size_t ji = 0; ji < doc.junctions.size(); ++ji) {
    for (std::size_t k = 0; k < doc.junctions[ji].routes.size(); ++k) {
      const auto& rs = doc.junctions[ji].routes[k];
      Route& r = m.routes_[static_cast<std::size_t>(m.route_ids_.at(rs.id))];
      for (const auto& c : rs.conflicts) r.conflicts.push_back(m.route_ids_.at(c));
    }
  }

  // Departure points and their derived departure routes.
  for (std::size_t si = 0; si < m.stations_.size(); ++si) {
    for (const auto& p : m.stations_[si].platforms) {
      for (Direction d : {Direction::kUp, Direction::kDown}) {
        auto plain = m.plain_successors(p.block, d);
        if (plain.empty()) continue;
        ControlPoint cp;
        cp.id = departure_point_id(m.blocks_[static_cast<std::size_t>(p.block)].id, d);
        cp.kind = ControlKind::kDeparture;
        cp.station = static_cast<int>(si);
        cp.direction = d;
        cp.block = p.block;

        Route r;
        r.id = "route:" + cp.id;
        r.kind = RouteKind::kDeparture;
        r.direction = d;
        r.from_block = p.block;
        r.station = static_cast<int>(si);
        BlockIndex cur = plain.front();
        for (std::size_t guard = 0; cur != kNoBlock && guard < nb; ++guard) {
          r.blocks.push_back(cur);
          if (m.blocks_[static_cast<std::size_t>(cur)].is_platform) break;
          auto next = m.plain_successors(cur, d);
          cur = next.empty() ? kNoBlock : next.front();
        }
        cp.route = static_cast<int>(m.routes_.size());
        r.entry_point = static_cast<int>(points.size());
        points.push_back(cp);
        m.route_ids_.emplace(r.id, static_cast<int>(m.routes_.size()));
        m.routes_.push_back(std::move(r));
      }
    }
  }
  // Derived routes conflict with any route sharing a block.
  for (std::size_t a = 0; a < m.routes_.size(); ++a) {
    if (m.routes_[a].kind != RouteKind::kDeparture) continue;
    for (std::size_t b = 0; b < m.routes_.size(); ++b) {
      if (a == b) continue;
      bool shared = false;
      for (BlockIndex x : m.routes_[a].blocks) {
        const auto& other = m.routes_[b].blocks;
        shared = shared || std::find(other.begin(), other.end(), x) != other.end();
      }
      if (!shared) continue;
      auto add_conflict = [](Route& r, int other) {
        if (std::find(r.conflicts.begin(), r.conflicts.end(), other) == r.conflicts.end()) {
          r.conflicts.push_back(other);
        }
      };
      add_conflict(m.routes_[a], static_cast<int>(b));
      add_conflict(m.routes_[b], static_cast<int>(a));
    }
  }

  // Canonical ordering of control points; remap indices.
  std::vector<int> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = points[static_cast<std::size_t>(a)];
    const auto& pb = points[static_cast<std::size_t>(b)];
    return std::tie(pa.station, pa.direction, pa.kind, pa.id) <
           std::tie(pb.station, pb.direction, pb.kind, pb.id);
  });
  std::vector<int> remap(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    m.points_.push_back(points[static_cast<std::size_t>(order[i])]);
  }
  for (auto& r : m.routes_) r.entry_point = remap[static_cast<std::size_t>(r.entry_point)];
  for (std::size_t i = 0; i < m.points_.size(); ++i) {
    const auto& cp = m.points_[i];
    m.point_ids_.emplace(cp.id, static_cast<int>(i));
    if (cp.kind == ControlKind::kDeparture) {
      m.departure_point_of_[static_cast<std::size_t>(cp.block)][index_of(cp.direction)] = static_cast<int>(i);
    }
  }
  return m;
}

RouteModel parse_route_config(std::string_view text) {
  RouteDocument doc = parse_route_document(text);
  auto violations = validate_route(doc);
  if (!violations.empty()) {
    const auto& v = violations.front();
    ErrorCode code = v.kind == "dangling reference" ? ErrorCode::kDanglingReference : ErrorCode::kInvariant;
    throw Error(code, describe(v));
  }
  return RouteModel::build(doc);
}

std::vector<ControlPoint> enumerate_control_points(const RouteModel& model) {
  return model.control_points();
}

}  // namespace railsim
