#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "railsim/env.hpp"

namespace railsim {

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<int>> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  double bootstrap_value = 0.0;  // V(final observation) when the last step is not terminal

  std::size_t size() const { return rewards.size(); }
  double total_reward() const;
  bool operator==(const Trajectory&) const = default;
};

struct ActionChoice {
  std::vector<int> actions;
  double log_prob = 0.0;
  double value = 0.0;
};

// Must be safe to call concurrently; all randomness comes from `rng`.
using ActionFn = std::function<ActionChoice(std::span<const double> obs, std::mt19937_64& rng)>;

// Per-environment action stream seed, derived from the episode seed.
std::uint64_t action_seed(std::uint64_t episode_seed);

// One episode per seed, at most `max_steps` decisions each. `threads` == 0 picks the hardware
// concurrency. Results are in seed order and independent of `threads`.
std::vector<Trajectory> vector_rollout(std::shared_ptr<const World> world, const EpisodeConfig& cfg,
                                       std::span<const std::uint64_t> seeds, const ActionFn& act,
                                       std::size_t max_steps, std::size_t threads = 0);

// Line-delimited JSON, one record per step.
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);

}  // namespace railsim
