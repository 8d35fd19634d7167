#include "railsim/rollout.hpp"

#include <atomic>
#include <exception>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace railsim {

double Trajectory::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

std::uint64_t action_seed(std::uint64_t episode_seed) {
  // splitmix64 finalizer
  std::uint64_t z = episode_seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Trajectory run_one(const std::shared_ptr<const World>& world, const EpisodeConfig& cfg, std::uint64_t seed,
                   const ActionFn& act, std::size_t max_steps) {
  RailEnv env(world, cfg);
  std::mt19937_64 rng(action_seed(seed));
  Trajectory tr;
  tr.seed = seed;
  std::vector<double> obs = env.reset(seed);
  bool done = false;
  for (std::size_t k = 0; k < max_steps && !done; ++k) {
    ActionChoice c = act(obs, rng);
    StepResult r = env.step(c.actions);
    tr.observations.push_back(std::move(obs));
    tr.actions.push_back(std::move(c.actions));
    tr.log_probs.push_back(c.log_prob);
    tr.values.push_back(c.value);
    tr.rewards.push_back(r.reward);
    tr.dones.push_back(r.done ? 1 : 0);
    done = r.done;
    obs = std::move(r.observation);
  }
  if (!done) {
    std::mt19937_64 scratch(0);
    tr.bootstrap_value = act(obs, scratch).value;
  }
  return tr;
}

}  // namespace

std::vector<Trajectory> vector_rollout(std::shared_ptr<const World> world, const EpisodeConfig& cfg,
                                       std::span<const std::uint64_t> seeds, const ActionFn& act,
                                       std::size_t max_steps, std::size_t threads) {
  std::vector<Trajectory> out(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, seeds.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = run_one(world, cfg, seeds[i], act, max_steps);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
          out[i] = run_one(world, cfg, seeds[i], act, max_steps);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (std::size_t e = 0; e < trajectories.size(); ++e) {
    const Trajectory& t = trajectories[e];
    for (std::size_t k = 0; k < t.size(); ++k) {
      nlohmann::json j = {{"episode", e},          {"seed", t.seed},
                          {"step", k},             {"observation", t.observations[k]},
                          {"actions", t.actions[k]}, {"log_prob", t.log_probs[k]},
                          {"reward", t.rewards[k]}, {"value", t.values[k]},
                          {"done", t.dones[k] != 0}};
      out << j.dump() << '\n';
    }
  }
}

}  // namespace railsim
