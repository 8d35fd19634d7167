#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "railsim/env.hpp"
#include "railsim/rollout.hpp"

namespace railsim {

// Shared tanh trunk (two hidden layers), one categorical head per action dimension, scalar value head.
// Matrices are row-major [out][in].
struct PolicyParams {
  int obs_dim = 0;
  int hidden = 0;
  std::vector<int> action_dims;

  std::vector<double> w1, b1, w2, b2;
  std::vector<double> wp, bp;  // all heads stacked: [sum(action_dims)][hidden]
  std::vector<double> wv, bv;  // [1][hidden]

  static PolicyParams zeros(int obs_dim, int hidden, std::vector<int> action_dims);
  static PolicyParams random(int obs_dim, int hidden, std::vector<int> action_dims, std::uint64_t seed);

  int total_logits() const;
  // Fixed tensor order: w1 b1 w2 b2 wp bp wv bv.
  static const std::vector<std::string>& tensor_names();
  std::vector<std::vector<double>*> tensors();
  std::vector<const std::vector<double>*> tensors() const;
  std::vector<std::vector<int>> tensor_shapes() const;
  std::size_t parameter_count() const;
  // Throws Error(kIncompatible) on inconsistent shapes, Error(kNumeric) on non-finite entries.
  void validate() const;

  bool operator==(const PolicyParams&) const = default;
};

struct PolicyOutput {
  std::vector<std::vector<double>> logits;  // per action dimension
  double value = 0.0;
};

PolicyOutput policy_forward(const PolicyParams& p, std::span<const double> obs);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double categorical_entropy(std::span<const double> logits);

struct SampledAction {
  std::vector<int> actions;
  double log_prob = 0.0;  // sum over dimensions
};

SampledAction sample_action(const std::vector<std::vector<double>>& logits, std::mt19937_64& rng);
std::vector<int> greedy_action(const std::vector<std::vector<double>>& logits);
double joint_log_prob(const std::vector<std::vector<double>>& logits, std::span<const int> actions);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
              double bootstrap_value, double gamma, double lambda);

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 3e-4;
  std::size_t minibatch = 256;
  int epochs = 4;
  int hidden = 64;

  int iterations = 50;
  std::size_t envs_per_iteration = 8;
  std::size_t max_steps = 1000;  // decisions per rollout episode
  std::size_t threads = 0;
  double reward_scale = 1e-3;    // applied to rewards before GAE only
  std::uint64_t seed = 1;

  void validate() const;
};

// Structured-text training config; unknown keys are rejected.
PpoConfig parse_ppo_config(std::string_view json_text);

struct Batch {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<int>> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return observations.size(); }
};

void normalize_advantages(Batch& b);

struct LossTerms {
  double policy = 0.0;   // clipped surrogate, negated
  double value = 0.0;    // mean squared error, unweighted
  double entropy = 0.0;  // mean over samples of the summed head entropies
  double total = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Loss over batch rows `rows` (all rows when empty). Accumulates d(total)/d(params) into `grad`
// when non-null; `grad` must have the shapes of `p`.
LossTerms ppo_loss(const PolicyParams& p, const Batch& b, std::span<const std::size_t> rows, const PpoConfig& cfg,
                   PolicyParams* grad);

struct AdamState {
  PolicyParams m;
  PolicyParams v;
  std::int64_t step = 0;

  static AdamState for_params(const PolicyParams& p);
};

// Epochs of shuffled minibatch Adam steps. Throws Error(kNumeric) and leaves `p` untouched if a
// loss or gradient turns non-finite. Returns the mean loss terms over minibatches.
LossTerms ppo_update(PolicyParams& p, AdamState& adam, const Batch& b, const PpoConfig& cfg, std::mt19937_64& rng);

// Builds an action function: sampling, or argmax with log_prob of the argmax when `greedy`.
ActionFn policy_action_fn(std::shared_ptr<const PolicyParams> p, bool greedy);

struct CurvePoint {
  int iteration = 0;
  std::int64_t steps = 0;  // environment decisions so far
  double mean_return = 0.0;
  LossTerms loss;
};

std::string curve_point_json(const CurvePoint& c);

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
};

using CurveCallback = std::function<void(const CurvePoint&, const PolicyParams&)>;

TrainResult train(std::shared_ptr<const World> world, const EpisodeConfig& env_cfg, const PpoConfig& cfg,
                  const CurveCallback& on_iteration = {});

// Seeds of the rollout episodes of one training iteration.
std::vector<std::uint64_t> iteration_seeds(std::uint64_t base, int iteration, std::size_t count);

std::string serialize_checkpoint(const PolicyParams& p);
PolicyParams parse_checkpoint(std::string_view json_text);

}  // namespace railsim
