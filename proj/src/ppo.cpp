#include "railsim/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "railsim/error.hpp"

namespace railsim {

using nlohmann::json;

namespace {

std::size_t sz(int n) { return static_cast<std::size_t>(n); }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

PolicyParams PolicyParams::zeros(int obs_dim, int hidden, std::vector<int> action_dims) {
  if (obs_dim <= 0 || hidden <= 0 || action_dims.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "policy needs a positive observation size, hidden width and heads");
  }
  for (int k : action_dims) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "action dimension with no choices");
  }
  PolicyParams p;
  p.obs_dim = obs_dim;
  p.hidden = hidden;
  p.action_dims = std::move(action_dims);
  const int n = p.total_logits();
  p.w1.assign(sz(hidden * obs_dim), 0.0);
  p.b1.assign(sz(hidden), 0.0);
  p.w2.assign(sz(hidden * hidden), 0.0);
  p.b2.assign(sz(hidden), 0.0);
  p.wp.assign(sz(n * hidden), 0.0);
  p.bp.assign(sz(n), 0.0);
  p.wv.assign(sz(hidden), 0.0);
  p.bv.assign(1, 0.0);
  return p;
}

PolicyParams PolicyParams::random(int obs_dim, int hidden, std::vector<int> action_dims, std::uint64_t seed) {
  PolicyParams p = zeros(obs_dim, hidden, std::move(action_dims));
  std::mt19937_64 rng(seed);
  auto fill = [&](std::vector<double>& w, int fan_in, double gain) {
    std::normal_distribution<double> d(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    for (double& x : w) x = d(rng);
  };
  fill(p.w1, obs_dim, 1.0);
  fill(p.w2, hidden, 1.0);
  fill(p.wp, hidden, 0.01);
  fill(p.wv, hidden, 1.0);
  return p;
}

int PolicyParams::total_logits() const { return std::accumulate(action_dims.begin(), action_dims.end(), 0); }

const std::vector<std::string>& PolicyParams::tensor_names() {
  static const std::vector<std::string> names = {"w1", "b1", "w2", "b2", "wp", "bp", "wv", "bv"};
  return names;
}

std::vector<std::vector<double>*> PolicyParams::tensors() { return {&w1, &b1, &w2, &b2, &wp, &bp, &wv, &bv}; }

std::vector<const std::vector<double>*> PolicyParams::tensors() const {
  return {&w1, &b1, &w2, &b2, &wp, &bp, &wv, &bv};
}

std::vector<std::vector<int>> PolicyParams::tensor_shapes() const {
  const int n = total_logits();
  return {{hidden, obs_dim}, {hidden}, {hidden, hidden}, {hidden}, {n, hidden}, {n}, {1, hidden}, {1}};
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

void PolicyParams::validate() const {
  if (obs_dim <= 0 || hidden <= 0 || action_dims.empty()) {
    throw Error(ErrorCode::kIncompatible, "policy has an empty layer");
  }
  const auto shapes = tensor_shapes();
  const auto ts = tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::size_t want = 1;
    for (int d : shapes[i]) want *= sz(d);
    if (ts[i]->size() != want) {
      throw Error(ErrorCode::kIncompatible, "tensor " + tensor_names()[i] + " has the wrong size");
    }
    if (!all_finite(*ts[i])) throw Error(ErrorCode::kNumeric, "tensor " + tensor_names()[i] + " is not finite");
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Forward {
  std::vector<double> h1, h2, logits;
  double value = 0.0;
};

void affine(const std::vector<double>& w, const std::vector<double>& b, std::span<const double> x,
            std::vector<double>& out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  out.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = b[r];
    const double* wr = &w[r * cols];
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
    out[r] = s;
  }
}

void forward(const PolicyParams& p, std::span<const double> obs, Forward& f) {
  if (obs.size() != sz(p.obs_dim)) {
    throw Error(ErrorCode::kIncompatible, "observation has " + std::to_string(obs.size()) + " entries, policy expects " +
                                              std::to_string(p.obs_dim));
  }
  affine(p.w1, p.b1, obs, f.h1);
  for (double& x : f.h1) x = std::tanh(x);
  affine(p.w2, p.b2, f.h1, f.h2);
  for (double& x : f.h2) x = std::tanh(x);
  affine(p.wp, p.bp, f.h2, f.logits);
  double v = p.bv[0];
  for (std::size_t i = 0; i < f.h2.size(); ++i) v += p.wv[i] * f.h2[i];
  f.value = v;
}

}  // namespace

PolicyOutput policy_forward(const PolicyParams& p, std::span<const double> obs) {
  Forward f;
  forward(p, obs, f);
  PolicyOutput out;
  out.value = f.value;
  std::size_t at = 0;
  for (int k : p.action_dims) {
    out.logits.emplace_back(f.logits.begin() + static_cast<std::ptrdiff_t>(at),
                            f.logits.begin() + static_cast<std::ptrdiff_t>(at + sz(k)));
    at += sz(k);
  }
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& x : out) x = std::exp(x);
  return out;
}

double categorical_entropy(std::span<const double> logits) {
  const auto lp = log_softmax(logits);
  double h = 0.0;
  for (double l : lp) h -= std::exp(l) * l;
  return std::max(0.0, h);
}

SampledAction sample_action(const std::vector<std::vector<double>>& logits, std::mt19937_64& rng) {
  SampledAction out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& z : logits) {
    if (z.empty()) throw Error(ErrorCode::kInvalidArgument, "empty action head");
    for (double x : z) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kNumeric, "non-finite logit");
    }
    const auto lp = log_softmax(z);
    const double r = u(rng);
    double c = 0.0;
    std::size_t pick = lp.size() - 1;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      c += std::exp(lp[i]);
      if (r < c) {
        pick = i;
        break;
      }
    }
    out.actions.push_back(static_cast<int>(pick));
    out.log_prob += lp[pick];
  }
  return out;
}

std::vector<int> greedy_action(const std::vector<std::vector<double>>& logits) {
  std::vector<int> out;
  for (const auto& z : logits) out.push_back(static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()));
  return out;
}

double joint_log_prob(const std::vector<std::vector<double>>& logits, std::span<const int> actions) {
  if (actions.size() != logits.size()) throw Error(ErrorCode::kInvalidArgument, "action count mismatch");
  double s = 0.0;
  for (std::size_t d = 0; d < logits.size(); ++d) s += log_softmax(logits[d]).at(sz(actions[d]));
  return s;
}

// ---------------------------------------------------------------------------

GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
              double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw Error(ErrorCode::kInvalidArgument, "gae inputs differ in length");
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "gamma and lambda must lie in [0, 1]");
  }
  GaeResult g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double next_v = k + 1 < n ? values[k + 1] : bootstrap_value;
    const double delta = rewards[k] + gamma * next_v * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    g.advantages[k] = next_adv;
    g.returns[k] = next_adv + values[k];
  }
  return g;
}

void PpoConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "gamma and lambda must lie in [0, 1]");
  }
  if (clip <= 0.0) throw Error(ErrorCode::kInvalidArgument, "clip must be positive");
  if (learning_rate <= 0.0 || minibatch == 0 || epochs < 1 || hidden < 1 || iterations < 0 ||
      envs_per_iteration == 0 || max_steps == 0 || reward_scale <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "training config has a non-positive size or rate");
  }
}

PpoConfig parse_ppo_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("training config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "training config must be an object");
  PpoConfig c;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "gamma") c.gamma = v.get<double>();
      else if (k == "lambda") c.lambda = v.get<double>();
      else if (k == "clip") c.clip = v.get<double>();
      else if (k == "value_coef") c.value_coef = v.get<double>();
      else if (k == "entropy_coef") c.entropy_coef = v.get<double>();
      else if (k == "learning_rate") c.learning_rate = v.get<double>();
      else if (k == "minibatch") c.minibatch = v.get<std::size_t>();
      else if (k == "epochs") c.epochs = v.get<int>();
      else if (k == "hidden") c.hidden = v.get<int>();
      else if (k == "iterations") c.iterations = v.get<int>();
      else if (k == "envs_per_iteration") c.envs_per_iteration = v.get<std::size_t>();
      else if (k == "max_steps") c.max_steps = v.get<std::size_t>();
      else if (k == "threads") c.threads = v.get<std::size_t>();
      else if (k == "reward_scale") c.reward_scale = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else throw Error(ErrorCode::kParse, "training config: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

void normalize_advantages(Batch& b) {
  const std::size_t n = b.advantages.size();
  if (n == 0) return;
  const double mean = std::accumulate(b.advantages.begin(), b.advantages.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : b.advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& a : b.advantages) a = (a - mean) / (sd + 1e-8);
}

// ---------------------------------------------------------------------------

LossTerms ppo_loss(const PolicyParams& p, const Batch& b, std::span<const std::size_t> rows, const PpoConfig& cfg,
                   PolicyParams* grad) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(b.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  LossTerms out;
  if (rows.empty()) return out;
  const double inv = 1.0 / static_cast<double>(rows.size());
  const std::size_t H = sz(p.hidden);
  const std::size_t D = sz(p.obs_dim);
  Forward f;
  std::vector<double> g_logits(sz(p.total_logits()));
  std::vector<double> g_h2(H), g_h1(H);

  for (std::size_t row : rows) {
    const auto& obs = b.observations.at(row);
    forward(p, obs, f);
    const auto& acts = b.actions.at(row);
    if (acts.size() != p.action_dims.size()) throw Error(ErrorCode::kIncompatible, "batch action width mismatch");

    double new_lp = 0.0;
    double entropy = 0.0;
    std::vector<std::vector<double>> probs;
    std::vector<std::vector<double>> logps;
    std::size_t at = 0;
    for (std::size_t d = 0; d < p.action_dims.size(); ++d) {
      const std::size_t k = sz(p.action_dims[d]);
      auto lp = log_softmax(std::span<const double>(f.logits).subspan(at, k));
      std::vector<double> pr(k);
      double h = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        pr[i] = std::exp(lp[i]);
        h -= pr[i] * lp[i];
      }
      new_lp += lp.at(sz(acts[d]));
      entropy += h;
      probs.push_back(std::move(pr));
      logps.push_back(std::move(lp));
      at += k;
    }

    const double adv = b.advantages.at(row);
    const double log_ratio = new_lp - b.old_log_probs.at(row);
    const double ratio = std::exp(log_ratio);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = clipped * adv;
    double d_newlp = 0.0;
    if (unclipped_obj <= clipped_obj) {
      out.policy -= unclipped_obj * inv;
      d_newlp = -unclipped_obj * inv;
    } else {
      out.policy -= clipped_obj * inv;
    }
    if (std::abs(ratio - 1.0) > cfg.clip) out.clip_fraction += inv;
    out.approx_kl -= log_ratio * inv;

    const double verr = f.value - b.returns.at(row);
    out.value += verr * verr * inv;
    out.entropy += entropy * inv;

    if (!grad) continue;
    at = 0;
    for (std::size_t d = 0; d < p.action_dims.size(); ++d) {
      const std::size_t k = sz(p.action_dims[d]);
      double h = 0.0;
      for (std::size_t i = 0; i < k; ++i) h -= probs[d][i] * logps[d][i];
      for (std::size_t i = 0; i < k; ++i) {
        const double onehot = static_cast<int>(i) == acts[d] ? 1.0 : 0.0;
        g_logits[at + i] = d_newlp * (onehot - probs[d][i]) +
                           cfg.entropy_coef * inv * probs[d][i] * (logps[d][i] + h);
      }
      at += k;
    }
    const double g_v = 2.0 * cfg.value_coef * verr * inv;

    std::fill(g_h2.begin(), g_h2.end(), 0.0);
    for (std::size_t r = 0; r < g_logits.size(); ++r) {
      const double g = g_logits[r];
      grad->bp[r] += g;
      double* gw = &grad->wp[r * H];
      const double* w = &p.wp[r * H];
      for (std::size_t c = 0; c < H; ++c) {
        gw[c] += g * f.h2[c];
        g_h2[c] += g * w[c];
      }
    }
    grad->bv[0] += g_v;
    for (std::size_t c = 0; c < H; ++c) {
      grad->wv[c] += g_v * f.h2[c];
      g_h2[c] += g_v * p.wv[c];
    }
    for (std::size_t c = 0; c < H; ++c) g_h2[c] *= 1.0 - f.h2[c] * f.h2[c];
    std::fill(g_h1.begin(), g_h1.end(), 0.0);
    for (std::size_t r = 0; r < H; ++r) {
      const double g = g_h2[r];
      grad->b2[r] += g;
      double* gw = &grad->w2[r * H];
      const double* w = &p.w2[r * H];
      for (std::size_t c = 0; c < H; ++c) {
        gw[c] += g * f.h1[c];
        g_h1[c] += g * w[c];
      }
    }
    for (std::size_t r = 0; r < H; ++r) {
      const double g = g_h1[r] * (1.0 - f.h1[r] * f.h1[r]);
      grad->b1[r] += g;
      double* gw = &grad->w1[r * D];
      for (std::size_t c = 0; c < D; ++c) gw[c] += g * obs[c];
    }
  }
  out.total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
  return out;
}

AdamState AdamState::for_params(const PolicyParams& p) {
  AdamState s;
  s.m = PolicyParams::zeros(p.obs_dim, p.hidden, p.action_dims);
  s.v = s.m;
  return s;
}

LossTerms ppo_update(PolicyParams& p, AdamState& adam, const Batch& b, const PpoConfig& cfg, std::mt19937_64& rng) {
  if (b.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training batch");
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const PolicyParams saved_p = p;
  const AdamState saved_adam = adam;

  std::vector<std::size_t> order(b.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  LossTerms mean;
  int batches = 0;
  PolicyParams grad = PolicyParams::zeros(p.obs_dim, p.hidden, p.action_dims);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t from = 0; from < order.size(); from += cfg.minibatch) {
      const std::size_t to = std::min(order.size(), from + cfg.minibatch);
      for (auto* t : grad.tensors()) std::fill(t->begin(), t->end(), 0.0);
      const LossTerms l =
          ppo_loss(p, b, std::span<const std::size_t>(order).subspan(from, to - from), cfg, &grad);
      bool finite = std::isfinite(l.total);
      for (const auto* t : grad.tensors()) finite = finite && all_finite(*t);
      if (!finite) {
        p = saved_p;
        adam = saved_adam;
        throw Error(ErrorCode::kNumeric, "non-finite loss or gradient; update aborted");
      }
      ++adam.step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
      auto ps = p.tensors();
      auto gs = grad.tensors();
      auto ms = adam.m.tensors();
      auto vs = adam.v.tensors();
      for (std::size_t t = 0; t < ps.size(); ++t) {
        auto& pt = *ps[t];
        const auto& gt = *gs[t];
        auto& mt = *ms[t];
        auto& vt = *vs[t];
        for (std::size_t i = 0; i < pt.size(); ++i) {
          mt[i] = kBeta1 * mt[i] + (1.0 - kBeta1) * gt[i];
          vt[i] = kBeta2 * vt[i] + (1.0 - kBeta2) * gt[i] * gt[i];
          pt[i] -= cfg.learning_rate * (mt[i] / c1) / (std::sqrt(vt[i] / c2) + kEps);
        }
      }
      mean.policy += l.policy;
      mean.value += l.value;
      mean.entropy += l.entropy;
      mean.total += l.total;
      mean.approx_kl += l.approx_kl;
      mean.clip_fraction += l.clip_fraction;
      ++batches;
    }
  }
  if (batches > 0) {
    const double k = 1.0 / batches;
    mean.policy *= k;
    mean.value *= k;
    mean.entropy *= k;
    mean.total *= k;
    mean.approx_kl *= k;
    mean.clip_fraction *= k;
  }
  return mean;
}

ActionFn policy_action_fn(std::shared_ptr<const PolicyParams> p, bool greedy) {
  return [p = std::move(p), greedy](std::span<const double> obs, std::mt19937_64& rng) {
    PolicyOutput out = policy_forward(*p, obs);
    ActionChoice c;
    c.value = out.value;
    if (greedy) {
      c.actions = greedy_action(out.logits);
      c.log_prob = joint_log_prob(out.logits, c.actions);
    } else {
      SampledAction s = sample_action(out.logits, rng);
      c.actions = std::move(s.actions);
      c.log_prob = s.log_prob;
    }
    return c;
  };
}

std::string curve_point_json(const CurvePoint& c) {
  json j = {{"iteration", c.iteration},
            {"steps", c.steps},
            {"mean_return", c.mean_return},
            {"policy_loss", c.loss.policy},
            {"value_loss", c.loss.value},
            {"entropy", c.loss.entropy},
            {"total_loss", c.loss.total},
            {"approx_kl", c.loss.approx_kl},
            {"clip_fraction", c.loss.clip_fraction}};
  return j.dump();
}

std::vector<std::uint64_t> iteration_seeds(std::uint64_t base, int iteration, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  const std::uint64_t root = action_seed(action_seed(base) ^ static_cast<std::uint64_t>(iteration));
  for (std::size_t i = 0; i < count; ++i) out[i] = action_seed(root + i);
  return out;
}

TrainResult train(std::shared_ptr<const World> world, const EpisodeConfig& env_cfg, const PpoConfig& cfg,
                  const CurveCallback& on_iteration) {
  cfg.validate();
  RailEnv probe(world, env_cfg);
  TrainResult out;
  out.params = PolicyParams::random(static_cast<int>(probe.observation_size()), cfg.hidden, probe.action_dims(),
                                    cfg.seed);
  AdamState adam = AdamState::for_params(out.params);
  std::mt19937_64 shuffle_rng(action_seed(cfg.seed ^ 0x5eedULL));
  std::int64_t steps = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto seeds = iteration_seeds(cfg.seed, it, cfg.envs_per_iteration);
    auto snapshot = std::make_shared<const PolicyParams>(out.params);
    const auto trajs =
        vector_rollout(world, env_cfg, seeds, policy_action_fn(snapshot, false), cfg.max_steps, cfg.threads);
    Batch b;
    double ret = 0.0;
    for (const auto& t : trajs) {
      std::vector<double> scaled(t.rewards);
      for (double& r : scaled) r *= cfg.reward_scale;
      const GaeResult g = gae(scaled, t.values, t.dones, t.bootstrap_value, cfg.gamma, cfg.lambda);
      for (std::size_t k = 0; k < t.size(); ++k) {
        b.observations.push_back(t.observations[k]);
        b.actions.push_back(t.actions[k]);
        b.old_log_probs.push_back(t.log_probs[k]);
        b.advantages.push_back(g.advantages[k]);
        b.returns.push_back(g.returns[k]);
      }
      ret += t.total_reward();
      steps += static_cast<std::int64_t>(t.size());
    }
    normalize_advantages(b);
    CurvePoint c;
    c.iteration = it;
    c.steps = steps;
    c.mean_return = trajs.empty() ? 0.0 : ret / static_cast<double>(trajs.size());
    c.loss = ppo_update(out.params, adam, b, cfg, shuffle_rng);
    out.curve.push_back(c);
    if (on_iteration) on_iteration(c, out.params);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string serialize_checkpoint(const PolicyParams& p) {
  p.validate();
  json tensors = json::object();
  const auto names = PolicyParams::tensor_names();
  const auto shapes = p.tensor_shapes();
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) tensors[names[i]] = {{"shape", shapes[i]}, {"data", *ts[i]}};
  json j = {{"format", "railsim-policy"}, {"version", 1},          {"obs_dim", p.obs_dim},
            {"hidden", p.hidden},         {"action_dims", p.action_dims}, {"tensors", tensors}};
  return j.dump() + "\n";
}

PolicyParams parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "railsim-policy") throw Error(ErrorCode::kParse, "not a policy checkpoint");
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::kIncompatible, "unsupported checkpoint version");
    PolicyParams p = PolicyParams::zeros(j.at("obs_dim").get<int>(), j.at("hidden").get<int>(),
                                         j.at("action_dims").get<std::vector<int>>());
    const auto names = PolicyParams::tensor_names();
    const auto shapes = p.tensor_shapes();
    auto ts = p.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto& t = j.at("tensors").at(names[i]);
      if (t.at("shape").get<std::vector<int>>() != shapes[i]) {
        throw Error(ErrorCode::kIncompatible, "checkpoint tensor " + names[i] + " has the wrong shape");
      }
      auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != ts[i]->size()) {
        throw Error(ErrorCode::kIncompatible, "checkpoint tensor " + names[i] + " has the wrong size");
      }
      *ts[i] = std::move(data);
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace railsim
