#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "railsim/error.hpp"
#include "railsim/io.hpp"
#include "railsim/ppo.hpp"
#include "support.hpp"

using namespace railsim;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Batch random_batch(const PolicyParams& p, std::size_t n, std::mt19937_64& rng) {
  Batch b;
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (std::size_t i = 0; i < n; ++i) {
    b.observations.push_back(random_vector(static_cast<std::size_t>(p.obs_dim), rng));
    std::vector<int> a;
    for (int d : p.action_dims) a.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(d)));
    const auto out = policy_forward(p, b.observations.back());
    b.old_log_probs.push_back(joint_log_prob(out.logits, a) + u(rng));
    b.actions.push_back(std::move(a));
    b.advantages.push_back(random_vector(1, rng)[0]);
    b.returns.push_back(random_vector(1, rng)[0]);
  }
  return b;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Oracle: A_t as the explicit discounted sum of TD errors, cut at the first terminal step.
std::vector<double> brute_gae(const std::vector<double>& r, const std::vector<double>& v,
                              const std::vector<std::uint8_t>& done, double boot, double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double coef = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double next = k + 1 < n ? v[k + 1] : boot;
      const double delta = r[k] + (done[k] ? 0.0 : gamma * next) - v[k];
      out[t] += coef * delta;
      if (done[k]) break;
      coef *= gamma * lambda;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("zero weights give uniform logits and zero value") {
  const PolicyParams p = PolicyParams::zeros(7, 16, {8, 8});
  const std::vector<double> obs{0.1, -0.3, 1, 0, 0.5, 0.2, -1};
  const auto out = policy_forward(p, obs);
  CHECK(out.value == 0.0);
  REQUIRE(out.logits.size() == 2);
  for (const auto& head : out.logits) {
    REQUIRE(head.size() == 8);
    const auto pr = softmax(head);
    for (double x : pr) CHECK(x == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(joint_log_prob({head}, std::vector<int>{3}) == doctest::Approx(-std::log(8.0)).epsilon(1e-12));
  }
  CHECK(categorical_entropy(out.logits[0]) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("softmax") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto l = random_vector(8, rng, 20.0);
    const auto pr = softmax(l);
    CHECK(std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0) <= 1e-12);
    const auto lp = log_softmax(l);
    for (std::size_t k = 0; k < l.size(); ++k) CHECK(std::exp(lp[k]) == doctest::Approx(pr[k]).epsilon(1e-9));
    const double h = categorical_entropy(l);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(8.0) + 1e-12);
  }
  std::vector<double> dominant(8, 0.0);
  dominant[5] = 50.0;
  CHECK(softmax(dominant)[5] > 1.0 - 1e-9);
  CHECK(greedy_action({dominant}) == std::vector<int>{5});
}

TEST_CASE("sampling a uniform head") {
  const std::vector<std::vector<double>> logits{std::vector<double>(8, 0.0)};
  std::mt19937_64 rng(123);
  const int n = 100000;
  std::vector<int> counts(8, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_action(logits, rng).actions[0])];
  double chi2 = 0.0;
  const double expected = n / 8.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 18.475);
}

TEST_CASE("sampling follows the softmax") {
  const std::vector<std::vector<double>> logits{{1.0, 0.0, -1.0, 2.0}};
  const auto pr = softmax(logits[0]);
  std::mt19937_64 rng(77);
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    const auto s = sample_action(logits, rng);
    ++counts[static_cast<std::size_t>(s.actions[0])];
    CHECK(s.log_prob == doctest::Approx(std::log(pr[static_cast<std::size_t>(s.actions[0])])).epsilon(1e-12));
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double sigma = std::sqrt(n * pr[k] * (1.0 - pr[k]));
    CHECK(std::abs(counts[k] - n * pr[k]) <= 3.0 * sigma);
  }
}

TEST_CASE("gae on one step") {
  const std::vector<double> r{2.0}, v{0.5};
  const std::vector<std::uint8_t> live{0}, term{1};
  const auto a = gae(r, v, live, 3.0, 0.9, 0.8);
  CHECK(a.advantages[0] == doctest::Approx(2.0 + 0.9 * 3.0 - 0.5).epsilon(1e-15));
  CHECK(a.returns[0] == doctest::Approx(2.0 + 0.9 * 3.0).epsilon(1e-15));
  const auto b = gae(r, v, term, 3.0, 0.9, 0.8);
  CHECK(b.advantages[0] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("gae telescopes when gamma and lambda are one") {
  std::mt19937_64 rng(4);
  const auto r = random_vector(30, rng);
  const auto v = random_vector(30, rng);
  const std::vector<std::uint8_t> dones(30, 0);
  const double boot = 0.7;
  const auto g = gae(r, v, dones, boot, 1.0, 1.0);
  for (std::size_t t = 0; t < r.size(); ++t) {
    const double tail = std::accumulate(r.begin() + static_cast<std::ptrdiff_t>(t), r.end(), 0.0);
    CHECK(g.advantages[t] == doctest::Approx(tail + boot - v[t]).epsilon(1e-10));
  }
}

TEST_CASE("gae matches the explicit sum") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = random_vector(50, rng);
    const auto v = random_vector(50, rng);
    std::vector<std::uint8_t> dones(50);
    for (auto& d : dones) d = u(rng) < 0.1;
    const double gamma = u(rng);
    const double lambda = u(rng);
    const double boot = random_vector(1, rng)[0];
    const auto g = gae(r, v, dones, boot, gamma, lambda);
    const auto oracle = brute_gae(r, v, dones, boot, gamma, lambda);
    for (std::size_t t = 0; t < r.size(); ++t) {
      CHECK(std::abs(g.advantages[t] - oracle[t]) <= 1e-10);
      CHECK(g.returns[t] == doctest::Approx(oracle[t] + v[t]).epsilon(1e-10));
    }
  }
  const std::vector<double> two(2, 0.0), one(1, 0.0);
  const std::vector<std::uint8_t> d2(2, 0);
  CHECK_THROWS_AS(gae(two, one, d2, 0.0, 0.9, 0.9), Error);
  CHECK_THROWS_AS(gae(two, two, d2, 0.0, 1.5, 0.9), Error);
}

TEST_CASE("clipped surrogate") {
  const PolicyParams p = PolicyParams::zeros(3, 4, {8});
  PpoConfig cfg;
  cfg.clip = 0.2;
  cfg.entropy_coef = 0.0;
  cfg.value_coef = 0.0;
  Batch b;
  b.observations = {{0.0, 0.0, 0.0}};
  b.actions = {{2}};
  b.returns = {0.0};
  const double lp = -std::log(8.0);

  b.old_log_probs = {lp - std::log(1.5)};
  b.advantages = {2.0};
  auto l = ppo_loss(p, b, {}, cfg, nullptr);
  CHECK(l.policy == doctest::Approx(-1.2 * 2.0).epsilon(1e-12));
  CHECK(l.clip_fraction == 1.0);

  // negative advantage keeps the larger, unclipped penalty
  b.advantages = {-2.0};
  l = ppo_loss(p, b, {}, cfg, nullptr);
  CHECK(l.policy == doctest::Approx(1.5 * 2.0).epsilon(1e-12));

  // the objective never exceeds (1 + eps) A for positive A
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lr(-2.0, 2.0);
  std::uniform_real_distribution<double> adv(0.01, 5.0);
  for (int i = 0; i < 1000; ++i) {
    b.old_log_probs = {lp - lr(rng)};
    b.advantages = {adv(rng)};
    l = ppo_loss(p, b, {}, cfg, nullptr);
    CHECK(-l.policy <= (1.0 + cfg.clip) * b.advantages[0] + 1e-12);
  }
}

TEST_CASE("unit ratio gives a zero surrogate after normalization") {
  std::mt19937_64 rng(12);
  const PolicyParams p = PolicyParams::random(5, 8, {3, 4}, 3);
  Batch b = random_batch(p, 40, rng);
  for (std::size_t i = 0; i < b.size(); ++i) {
    b.old_log_probs[i] = joint_log_prob(policy_forward(p, b.observations[i]).logits, b.actions[i]);
  }
  normalize_advantages(b);
  const double mean = std::accumulate(b.advantages.begin(), b.advantages.end(), 0.0) / b.size();
  CHECK(std::abs(mean) <= 1e-12);
  PpoConfig cfg;
  const auto l = ppo_loss(p, b, {}, cfg, nullptr);
  CHECK(std::abs(l.policy) <= 1e-12);
  CHECK(l.clip_fraction == 0.0);
  CHECK(std::abs(l.approx_kl) <= 1e-12);
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 rng(2);
  PolicyParams p = PolicyParams::random(6, 7, {3, 5}, 11);
  // larger weights so the heads are not near uniform
  for (auto* t : p.tensors()) {
    for (double& x : *t) x *= 2.0;
  }
  const Batch b = random_batch(p, 10, rng);
  PpoConfig cfg;
  cfg.entropy_coef = 0.05;
  cfg.value_coef = 0.5;
  PolicyParams grad = PolicyParams::zeros(p.obs_dim, p.hidden, p.action_dims);
  ppo_loss(p, b, {}, cfg, &grad);

  const double h = 1e-5;
  const auto names = PolicyParams::tensor_names();
  auto tensors = p.tensors();
  const auto grads = grad.tensors();
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    auto& t = *tensors[ti];
    std::vector<double> fd(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double keep = t[k];
      t[k] = keep + h;
      const double up = ppo_loss(p, b, {}, cfg, nullptr).total;
      t[k] = keep - h;
      const double down = ppo_loss(p, b, {}, cfg, nullptr).total;
      t[k] = keep;
      fd[k] = (up - down) / (2.0 * h);
    }
    std::vector<double> diff(fd.size());
    for (std::size_t k = 0; k < fd.size(); ++k) diff[k] = fd[k] - (*grads[ti])[k];
    const double scale = std::max({norm(fd), norm(*grads[ti]), 1e-8});
    INFO("tensor " << names[ti]);
    CHECK(norm(diff) / scale < 1e-4);
  }
}

TEST_CASE("shapes and validation") {
  PolicyParams p = PolicyParams::random(4, 6, {8, 8}, 1);
  CHECK(p.total_logits() == 16);
  std::size_t n = 0;
  for (const auto* t : std::as_const(p).tensors()) n += t->size();
  CHECK(n == p.parameter_count());
  CHECK(n == 4u * 6 + 6 + 6u * 6 + 6 + 16u * 6 + 16 + 6 + 1);
  p.validate();
  p.wv[0] = std::nan("");
  CHECK_THROWS_AS(p.validate(), Error);
  p = PolicyParams::random(4, 6, {8, 8}, 1);
  p.b1.pop_back();
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("checkpoint round trip") {
  const PolicyParams p = PolicyParams::random(9, 5, {8, 8, 8}, 21);
  const std::string text = serialize_checkpoint(p);
  CHECK(parse_checkpoint(text) == p);
  CHECK(serialize_checkpoint(parse_checkpoint(text)) == text);

  auto j = nlohmann::json::parse(text);
  CHECK_THROWS_AS(parse_checkpoint("{not json"), Error);
  j["hidden"] = 6;
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), Error);
}

TEST_CASE("greedy action function") {
  const auto p = std::make_shared<const PolicyParams>(PolicyParams::random(5, 6, {4}, 3));
  const std::vector<double> obs{0.1, 0.2, -0.3, 0.4, 0.5};
  const auto fn = policy_action_fn(p, true);
  std::mt19937_64 a(1), b(2);
  const auto x = fn(obs, a);
  const auto y = fn(obs, b);
  CHECK(x.actions == y.actions);
  const auto out = policy_forward(*p, obs);
  CHECK(x.actions == greedy_action(out.logits));
  CHECK(x.value == out.value);
  CHECK(x.log_prob == doctest::Approx(joint_log_prob(out.logits, x.actions)).epsilon(1e-12));
}

namespace {

PpoConfig tiny_training() {
  PpoConfig c;
  c.iterations = 2;
  c.envs_per_iteration = 2;
  c.max_steps = 4;
  c.hidden = 8;
  c.minibatch = 4;
  c.epochs = 2;
  c.threads = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("training with no iterations returns the initial parameters") {
  const auto w = testing::desk_world();
  const auto env_cfg = load_episode_config(testing::fixture("episode_toy.json"));
  PpoConfig c = tiny_training();
  c.iterations = 0;
  const auto r = train(w, env_cfg, c);
  RailEnv probe(w, env_cfg);
  CHECK(r.curve.empty());
  CHECK(r.params == PolicyParams::random(static_cast<int>(probe.observation_size()), c.hidden, probe.action_dims(),
                                         c.seed));
}

TEST_CASE("training is reproducible") {
  const auto w = testing::desk_world();
  const auto env_cfg = load_episode_config(testing::fixture("episode_toy.json"));
  const auto a = train(w, env_cfg, tiny_training());
  PpoConfig c = tiny_training();
  c.threads = 1;
  const auto b = train(w, env_cfg, c);
  REQUIRE(a.curve.size() == 2);
  CHECK(a.params == b.params);
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(curve_point_json(a.curve[i]) == curve_point_json(b.curve[i]));
  CHECK(std::isfinite(a.curve.back().loss.total));
}

TEST_CASE("training config") {
  const auto c = parse_ppo_config(R"({"gamma": 0.95, "iterations": 3})");
  CHECK(c.gamma == 0.95);
  CHECK(c.iterations == 3);
  CHECK_THROWS_AS(parse_ppo_config(R"({"gama": 0.95})"), Error);
  CHECK_THROWS_AS(parse_ppo_config(R"({"clip": -1})"), Error);
  CHECK_THROWS_AS(parse_ppo_config("[1]"), Error);
}
