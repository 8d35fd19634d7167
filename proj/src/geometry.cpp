#include "railsim/geometry.hpp"

#include <algorithm>

#include "railsim/error.hpp"

namespace railsim {

namespace {

// Follows the through line in direction d, preferring successors that lead on.
std::vector<BlockIndex> walk(const RouteModel& m, BlockIndex start, Direction d) {
  std::vector<BlockIndex> out{start};
  std::vector<bool> seen(m.blocks().size(), false);
  seen[static_cast<std::size_t>(start)] = true;
  BlockIndex cur = start;
  while (true) {
    BlockIndex next = kNoBlock;
    for (BlockIndex s : m.block(cur).succ[index_of(d)]) {
      if (seen[static_cast<std::size_t>(s)]) continue;
      if (m.block(s).is_platform || !m.is_dead_end(s, d)) {
        next = s;
        break;
      }
    }
    if (next == kNoBlock) break;
    seen[static_cast<std::size_t>(next)] = true;
    out.push_back(next);
    cur = next;
  }
  return out;
}

}  // namespace

LineGeometry::LineGeometry(const RouteModel& model) : model_(&model) {
  const auto& stations = model.stations();
  blocks_.assign(model.blocks().size(), {});
  stations_.assign(stations.size(), {});
  if (stations.empty()) return;

  std::vector<bool> assigned(model.blocks().size(), false);
  std::vector<bool> anchored(stations.size(), false);

  // Up walk defines true distances and station anchors.
  double x = 0.0;
  for (BlockIndex b : walk(model, stations.front().platforms.front().block, Direction::kUp)) {
    const Block& blk = model.block(b);
    blocks_[static_cast<std::size_t>(b)] = {x, x + blk.length_m};
    assigned[static_cast<std::size_t>(b)] = true;
    if (blk.station >= 0 && !anchored[static_cast<std::size_t>(blk.station)]) {
      stations_[static_cast<std::size_t>(blk.station)] = {x, x + blk.length_m};
      anchored[static_cast<std::size_t>(blk.station)] = true;
    }
    x += blk.length_m;
  }
  length_ = x;
  for (std::size_t s = 0; s < stations.size(); ++s) {
    if (!anchored[s]) {
      throw Error(ErrorCode::kInvariant, "station order: " + stations[s].id + " is not on the up line");
    }
    if (s > 0 && stations_[s].lo < stations_[s - 1].lo) {
      throw Error(ErrorCode::kInvariant, "station order: " + stations[s].id + " listed out of line order");
    }
  }

  // Down walk is stretched between anchors.
  auto down = walk(model, stations.back().platforms.front().block, Direction::kDown);
  std::vector<std::size_t> anchor_at;  // indices into `down` of platform blocks
  for (std::size_t i = 0; i < down.size(); ++i) {
    if (model.block(down[i]).station >= 0) anchor_at.push_back(i);
  }
  for (std::size_t k = 0; k < anchor_at.size(); ++k) {
    BlockIndex pb = down[anchor_at[k]];
    int st = model.block(pb).station;
    if (!assigned[static_cast<std::size_t>(pb)]) {
      blocks_[static_cast<std::size_t>(pb)] = stations_[static_cast<std::size_t>(st)];
      assigned[static_cast<std::size_t>(pb)] = true;
    }
    if (k + 1 == anchor_at.size()) break;
    int next_st = model.block(down[anchor_at[k + 1]]).station;
    double from = stations_[static_cast<std::size_t>(st)].lo;
    double to = stations_[static_cast<std::size_t>(next_st)].hi;
    double total = 0.0;
    for (std::size_t i = anchor_at[k] + 1; i < anchor_at[k + 1]; ++i) total += model.block(down[i]).length_m;
    double s = 0.0;
    for (std::size_t i = anchor_at[k] + 1; i < anchor_at[k + 1]; ++i) {
      const double len = model.block(down[i]).length_m;
      const double scale = total > 0.0 ? (from - to) / total : 0.0;
      if (!assigned[static_cast<std::size_t>(down[i])]) {
        blocks_[static_cast<std::size_t>(down[i])] = {from - (s + len) * scale, from - s * scale};
        assigned[static_cast<std::size_t>(down[i])] = true;
      }
      s += len;
    }
  }

  // Everything else (crossovers, depot spurs) collapses onto the exit point of
  // an already placed predecessor.
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t b = 0; b < model.blocks().size(); ++b) {
      if (assigned[b]) continue;
      for (Direction d : {Direction::kUp, Direction::kDown}) {
        for (BlockIndex p : model.blocks()[b].pred[index_of(d)]) {
          if (!assigned[static_cast<std::size_t>(p)] || assigned[b]) continue;
          const auto& iv = blocks_[static_cast<std::size_t>(p)];
          double at = d == Direction::kUp ? iv.hi : iv.lo;
          blocks_[b] = {at, at};
          assigned[b] = true;
          progress = true;
        }
      }
    }
  }
}

double LineGeometry::station_position(int station) const {
  const auto& iv = stations_[static_cast<std::size_t>(station)];
  return 0.5 * (iv.lo + iv.hi);
}

double LineGeometry::position(BlockIndex b, double offset, Direction d) const {
  const auto& iv = blocks_[static_cast<std::size_t>(b)];
  const double len = model_->block(b).length_m;
  const double frac = len > 0.0 ? std::clamp(offset / len, 0.0, 1.0) : 0.0;
  return d == Direction::kUp ? iv.lo + frac * (iv.hi - iv.lo) : iv.hi - frac * (iv.hi - iv.lo);
}

}  // namespace railsim
