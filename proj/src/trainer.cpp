#include "wrsn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wrsn {

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(lambda_gae >= 0.0 && lambda_gae <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (!(lr_actor >= 0.0) || !(lr_critic >= 0.0)) {
    throw std::invalid_argument("learning rates must be >= 0");
  }
  if (!(reward_scale > 0.0)) throw std::invalid_argument("reward scale must be > 0");
  if (epochs < 0 || instances_per_epoch < 0) {
    throw std::invalid_argument("epochs and instance count must be >= 0");
  }
  if (action_cap < 1) throw std::invalid_argument("action cap must be >= 1");
  if (latent < 1) throw std::invalid_argument("latent width must be >= 1");
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = *it + gamma * g;
  return g;
}

std::vector<double> compute_gae(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw std::invalid_argument("compute_gae: need one more value than rewards");
  }
  std::vector<double> adv(rewards.size());
  double running = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    const double delta = rewards[k] + gamma * values[k + 1] - values[k];
    running = gamma * lambda * running + delta;
    adv[k] = running;
  }
  return adv;
}

std::vector<double> Trajectory::rewards() const {
  std::vector<double> r;
  r.reserve(steps.size());
  for (const auto& s : steps) r.push_back(s.reward);
  return r;
}

Trajectory rollout(Environment& env, const ActorParams& actor, Decoding decoding,
                   std::mt19937_64& rng) {
  Trajectory traj;
  Observation obs = env.observe();
  while (!env.state().terminal()) {
    const ActionDistribution dist = actor_forward(actor, obs);
    const int action =
        decoding == Decoding::kGreedy ? greedy_action(dist) : sample_action(dist, rng);
    StepResult res = env.step(action);
    traj.steps.push_back(
        {std::move(obs), action, res.reward, dist.log_prob(action), entropy(dist)});
    obs = std::move(res.next_obs);
  }
  const Termination cause = env.state().termination;
  traj.truncated = cause == Termination::kActionCap || cause == Termination::kTimeLimit;
  traj.lifetime = env.state().time;
  traj.final_obs = std::move(obs);
  return traj;
}

TrainingState make_training_state(const TrainConfig& config) {
  auto [actor, critic] = init_params(config.latent, config.seed);
  const auto na = static_cast<Eigen::Index>(actor.size());
  const auto nc = static_cast<Eigen::Index>(critic.size());
  return TrainingState{std::move(actor), std::move(critic), AdamState(na), AdamState(nc), 0};
}

EpisodeUpdate update_from_trajectory(const Trajectory& traj, TrainingState& state,
                                     const TrainConfig& config) {
  const std::size_t T = traj.steps.size();
  EpisodeUpdate out;
  out.lifetime = traj.lifetime;
  out.length = static_cast<int>(T);
  if (T == 0) return out;

  std::vector<double> rewards(T);
  std::vector<double> values(T + 1);
  double entropy_sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    rewards[t] = traj.steps[t].reward / config.reward_scale;
    values[t] = critic_forward(state.critic, traj.steps[t].obs);
    entropy_sum += traj.steps[t].entropy;
  }
  values[T] = traj.truncated ? critic_forward(state.critic, traj.final_obs) : 0.0;
  out.mean_entropy = entropy_sum / static_cast<double>(T);

  std::vector<double> adv = compute_gae(rewards, values, config.gamma, config.lambda_gae);
  if (config.normalize_advantages && T > 1) {
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(T)) + 1e-8;
    for (double& a : adv) a = (a - mean) / sd;
  }

  ActorParams actor_grad(state.actor.shape());
  CriticParams critic_grad(state.critic.shape());
  double ret = values[T];
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  for (std::size_t k = T; k-- > 0;) {
    ret = config.gamma * ret + rewards[k];
    const auto& step = traj.steps[k];
    actor_loss += actor_backward(state.actor, step.obs, step.action, adv[k], config.beta,
                                 actor_grad);
    critic_loss += critic_backward(state.critic, step.obs, ret, critic_grad);
  }
  out.actor_loss = actor_loss / static_cast<double>(T);
  out.critic_loss = critic_loss / static_cast<double>(T);

  const bool actor_ok =
      adam_update(state.actor.values(), actor_grad.values(), state.actor_opt, config.lr_actor);
  const bool critic_ok = adam_update(state.critic.values(), critic_grad.values(),
                                     state.critic_opt, config.lr_critic);
  out.skipped = !actor_ok || !critic_ok;
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ index) ^ (stream * 0xd1b54a32d192ed03ULL));
}

EpochMetrics train_epoch(std::span<const NetworkInstance> instances, const McParams& mc,
                         const SimConfig& sim, TrainingState& state,
                         const TrainConfig& config) {
  if (instances.empty()) throw std::invalid_argument("train_epoch: no instances");
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig episode_cfg = sim;
  episode_cfg.action_cap = config.action_cap;
  episode_cfg.mode = config.traffic_mode;

  EpochMetrics m;
  m.epoch = state.epoch + 1;
  const std::uint64_t epoch_seed = derive_seed(config.seed, static_cast<std::uint64_t>(m.epoch), 7);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      Environment env(instances[i], mc, episode_cfg);
      env.reset(derive_seed(epoch_seed, i, 0));
      std::mt19937_64 rng(derive_seed(epoch_seed, i, 1));
      const Trajectory traj = rollout(env, state.actor, Decoding::kSample, rng);
      const EpisodeUpdate u = update_from_trajectory(traj, state, config);
      m.mean_lifetime_s += u.lifetime;
      m.mean_len += u.length;
      m.mean_entropy += u.mean_entropy;
      m.actor_loss += u.actor_loss;
      m.critic_loss += u.critic_loss;
      m.skipped_updates += u.skipped ? 1 : 0;
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("instance " + std::to_string(i) + ": " + e.what());
    }
  }
  const double count = static_cast<double>(instances.size());
  m.mean_lifetime_s /= count;
  m.mean_len /= count;
  m.mean_entropy /= count;
  m.actor_loss /= count;
  m.critic_loss /= count;
  m.wallclock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  state.epoch = m.epoch;
  return m;
}

}  // namespace wrsn
