#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "support.hpp"
#include "wrsn/optim.hpp"
#include "wrsn/trainer.hpp"

using namespace wrsn;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.latent = 8;
  c.action_cap = 25;
  c.seed = 5;
  return c;
}

SimConfig expected_sim() {
  SimConfig s;
  s.mode = TrafficMode::kExpected;
  return s;
}

Trajectory sample_episode(const NetworkInstance& inst, const ActorParams& actor, int cap,
                          std::uint64_t seed) {
  SimConfig sim = expected_sim();
  sim.action_cap = cap;
  Environment env(inst, McParams{}, sim);
  env.reset(seed);
  std::mt19937_64 rng(seed + 1);
  return rollout(env, actor, Decoding::kSample, rng);
}

}  // namespace

TEST_CASE("discounted return examples") {
  std::vector<double> one{4.0};
  CHECK(discounted_return(one, 0.9) == 4.0);
  std::vector<double> three{1, 1, 1};
  CHECK(discounted_return(three, 0.5) == 1.75);
  CHECK(discounted_return(three, 0.0) == 1.0);
}

TEST_CASE("GAE examples") {
  std::vector<double> r{1, 1};
  std::vector<double> v{0, 0, 0};
  auto a = compute_gae(r, v, 1.0, 1.0);
  CHECK(a == std::vector<double>{2, 1});

  std::vector<double> r3{0.5, 2.0, 1.0};
  std::vector<double> v3{0.3, -0.2, 0.7, 0.0};
  a = compute_gae(r3, v3, 0.9, 0.0);
  for (std::size_t t = 0; t < 3; ++t) CHECK(a[t] == r3[t] + 0.9 * v3[t + 1] - v3[t]);

  CHECK_THROWS_AS(compute_gae(r3, v, 0.9, 0.9), std::invalid_argument);
}

TEST_CASE("GAE with lambda one telescopes to return minus baseline") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 60);
    const double gamma = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
    std::vector<double> r(T), v(T + 1, 0.0);
    for (auto& x : r) x = u(rng);
    for (int t = 0; t < T; ++t) v[t] = u(rng) - 1.0;
    auto a = compute_gae(r, v, gamma, 1.0);
    for (int t = 0; t < T; ++t) {
      double g = 0.0, w = 1.0;
      for (int l = t; l < T; ++l, w *= gamma) g += w * r[l];
      CHECK(std::abs(a[t] - (g - v[t])) <= 1e-10);
    }
  }
}

TEST_CASE("Adam update examples") {
  Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 0.7);
  AdamState s(3);
  CHECK(adam_update(p, Eigen::Vector3d(1, -2, 3), s, 0.0));
  CHECK(p.isApproxToConstant(0.7, 0.0));

  AdamState z(3);
  CHECK(adam_update(p, Eigen::Vector3d::Zero(), z, 0.1));
  CHECK(p.isApproxToConstant(0.7, 0.0));

  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  AdamState one(1);
  adam_update(x, Eigen::VectorXd::Constant(1, 1.0), one, 0.1);
  CHECK(std::abs((1.0 - x(0)) - 0.1) <= 1e-8);

  Eigen::VectorXd y = Eigen::VectorXd::Constant(2, 1.0);
  AdamState bad(2);
  CHECK_FALSE(adam_update(y, Eigen::Vector2d(1.0, std::nan("")), bad, 0.1));
  CHECK(y.isApproxToConstant(1.0, 0.0));
  CHECK(bad.step == 0);
  CHECK(bad.m.isZero());
}

TEST_CASE("Adam follows the textbook recursion") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd p = Eigen::VectorXd::NullaryExpr(4, [&] { return g(rng); });
  AdamState s(4);
  std::vector<double> ref(p.data(), p.data() + 4), m(4, 0.0), v(4, 0.0);
  for (int t = 1; t <= 30; ++t) {
    Eigen::VectorXd grad = Eigen::VectorXd::NullaryExpr(4, [&] { return g(rng); });
    adam_update(p, grad, s, 0.01);
    for (int i = 0; i < 4; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grad(i);
      v[i] = 0.999 * v[i] + 0.001 * grad(i) * grad(i);
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < 4; ++i) CHECK(std::abs(p(i) - ref[i]) <= 1e-12);
}

TEST_CASE("one episode update equals REINFORCE with a baseline") {
  auto inst = test::default_instance(31);
  TrainConfig cfg = small_config();
  cfg.beta = 0.0;
  cfg.gamma = 1.0;
  cfg.lambda_gae = 1.0;
  TrainingState state = make_training_state(cfg);
  const TrainingState before = state;
  for (bool truncated_run : {false, true}) {
    state = before;
    Trajectory traj = sample_episode(inst, state.actor, truncated_run ? 2 : 2000, 9);
    REQUIRE(traj.truncated == truncated_run);
    const std::size_t T = traj.steps.size();

    // reference: G_t from the scaled rewards, baseline V(x_t)
    const double tail = traj.truncated ? critic_forward(before.critic, traj.final_obs) : 0.0;
    std::vector<double> G(T);
    double acc = tail;
    for (std::size_t k = T; k-- > 0;) {
      acc += traj.steps[k].reward / cfg.reward_scale;
      G[k] = acc;
    }
    ActorParams ref(before.actor.shape());
    for (std::size_t t = 0; t < T; ++t) {
      const double adv = G[t] - critic_forward(before.critic, traj.steps[t].obs);
      actor_backward(before.actor, traj.steps[t].obs, traj.steps[t].action, adv, 0.0, ref);
    }
    update_from_trajectory(traj, state, cfg);
    const Eigen::VectorXd step = state.actor.values() - before.actor.values();
    const Eigen::VectorXd g = ref.values();
    const Eigen::VectorXd expect =
        -cfg.lr_actor * g.array() / (g.array().abs() + 1e-8);
    CHECK((step - expect).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("zero learning rates freeze the parameters") {
  std::vector<NetworkInstance> insts{test::default_instance(1), test::default_instance(2)};
  TrainConfig cfg = small_config();
  cfg.lr_actor = 0.0;
  cfg.lr_critic = 0.0;
  TrainingState state = make_training_state(cfg);
  const TrainingState before = state;
  train_epoch(insts, McParams{}, expected_sim(), state, cfg);
  CHECK(state.actor.values() == before.actor.values());
  CHECK(state.critic.values() == before.critic.values());
  CHECK(state.epoch == 1);
}

TEST_CASE("training is reproducible") {
  std::vector<NetworkInstance> insts{test::default_instance(3), test::default_instance(4)};
  TrainConfig cfg = small_config();
  TrainingState a = make_training_state(cfg), b = make_training_state(cfg);
  for (int e = 0; e < 2; ++e) {
    EpochMetrics ma = train_epoch(insts, McParams{}, expected_sim(), a, cfg);
    EpochMetrics mb = train_epoch(insts, McParams{}, expected_sim(), b, cfg);
    CHECK(ma.mean_lifetime_s == mb.mean_lifetime_s);
    CHECK(ma.mean_len == mb.mean_len);
    CHECK(ma.mean_entropy == mb.mean_entropy);
    CHECK(ma.actor_loss == mb.actor_loss);
    CHECK(ma.critic_loss == mb.critic_loss);
  }
  CHECK(a.actor.values() == b.actor.values());
  CHECK(a.actor_opt.v == b.actor_opt.v);
  CHECK_THROWS_AS(train_epoch({}, McParams{}, expected_sim(), a, cfg), std::invalid_argument);
}

TEST_CASE("a positive advantage makes the chosen action more likely") {
  auto inst = test::default_instance(6);
  TrainConfig cfg = small_config();
  cfg.beta = 0.0;
  cfg.lr_actor = 1e-4;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    TrainingState state = make_training_state(cfg);
    state.critic.set_zero();
    Environment env(inst, McParams{}, expected_sim());
    Trajectory traj;
    traj.final_obs = env.reset(1);
    TrajectoryStep step;
    step.obs = traj.final_obs;
    step.action = static_cast<int>(seed % 21);
    step.reward = 300.0;
    traj.steps.push_back(step);
    const double before = actor_forward(state.actor, step.obs).log_prob(step.action);
    update_from_trajectory(traj, state, cfg);
    CHECK(actor_forward(state.actor, step.obs).log_prob(step.action) > before);
  }
}

TEST_CASE("critic regression on a fixed batch does not go uphill") {
  int monotone = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    // batch: one early rollout with its scaled discounted returns
    auto [actor, critic] = init_params(16, seed + 1);
    SimConfig sim = expected_sim();
    sim.action_cap = 64;
    Environment env(test::default_instance(300 + seed), McParams{}, sim);
    env.reset(seed);
    std::mt19937_64 rng(seed);
    Trajectory traj = rollout(env, actor, Decoding::kSample, rng);
    std::vector<double> targets(traj.steps.size());
    double acc = 0.0;
    for (std::size_t k = targets.size(); k-- > 0;) {
      acc = traj.steps[k].reward / 1000.0 + 0.95 * acc;
      targets[k] = acc;
    }
    AdamState opt(static_cast<Eigen::Index>(critic.size()));
    double prev = 1e300;
    bool ok = true;
    for (int it = 0; it < 100; ++it) {
      CriticParams grad(critic.shape());
      double loss = 0.0;
      for (std::size_t i = 0; i < targets.size(); ++i)
        loss += critic_backward(critic, traj.steps[i].obs, targets[i], grad);
      ok = ok && loss <= prev + 1e-12;
      prev = loss;
      adam_update(critic.values(), grad.values(), opt, 1e-3);
    }
    monotone += ok ? 1 : 0;
  }
  CHECK(monotone >= 18);
}

TEST_CASE("GAE with lambda below one has lower variance") {
  auto inst = test::default_instance(12);
  auto [actor, critic] = init_params(8, 3);
  std::vector<double> a_lambda, a_one;
  for (int ep = 0; ep < 100; ++ep) {
    Trajectory traj = sample_episode(inst, actor, 40, 1000 + ep);
    std::vector<double> r = traj.rewards();
    for (double& x : r) x /= 1000.0;
    std::vector<double> v;
    for (const auto& s : traj.steps) v.push_back(critic_forward(critic, s.obs));
    v.push_back(traj.truncated ? critic_forward(critic, traj.final_obs) : 0.0);
    for (double x : compute_gae(r, v, 0.95, 0.9)) a_lambda.push_back(x);
    for (double x : compute_gae(r, v, 0.95, 1.0)) a_one.push_back(x);
  }
  auto var = [](const std::vector<double>& x) {
    double m = 0.0, s = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
  };
  CHECK(var(a_lambda) <= var(a_one));
}

TEST_CASE("reward scale only rescales the learning targets") {
  std::vector<NetworkInstance> insts{test::default_instance(13)};
  TrainConfig cfg = small_config();
  cfg.lr_actor = cfg.lr_critic = 0.0;
  TrainConfig big = cfg;
  big.reward_scale = cfg.reward_scale * 4.0;
  TrainingState a = make_training_state(cfg), b = make_training_state(big);
  EpochMetrics ma = train_epoch(insts, McParams{}, expected_sim(), a, cfg);
  EpochMetrics mb = train_epoch(insts, McParams{}, expected_sim(), b, big);
  CHECK(ma.mean_lifetime_s == mb.mean_lifetime_s);
  CHECK(ma.mean_len == mb.mean_len);

  std::vector<double> r{120.0, 40.0, 900.0};
  std::vector<double> zero(4, 0.0);
  std::vector<double> r1 = r, r4 = r;
  for (double& x : r1) x /= cfg.reward_scale;
  for (double& x : r4) x /= big.reward_scale;
  auto a1 = compute_gae(r1, zero, 0.95, 0.9);
  auto a4 = compute_gae(r4, zero, 0.95, 0.9);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a1[i] == doctest::Approx(4.0 * a4[i]).epsilon(1e-14));
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 2, 1));
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 3, 0));
  CHECK(derive_seed(1, 2, 0) != derive_seed(2, 2, 0));
}
