#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wrsn/optim.hpp"
#include "wrsn/policy_net.hpp"
#include "wrsn/sim.hpp"

namespace wrsn {

struct TrainConfig {
  double gamma = 0.95;
  double lambda_gae = 0.9;
  double beta = 0.02;            // entropy bonus
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double reward_scale = 1000.0;  // rewards are divided by this before learning
  int epochs = 200;
  int instances_per_epoch = 200;
  int action_cap = 2000;
  std::uint64_t seed = 1;
  bool normalize_advantages = false;
  int latent = 64;
  int checkpoint_every = 10;     // epochs between checkpoints, 0 = only final
  TrafficMode traffic_mode = TrafficMode::kExpected;  // overrides the sim mode while training

  void validate() const;
};

double discounted_return(std::span<const double> rewards, double gamma);

/// Backward recursion A_t = delta_t + gamma * lambda * A_{t+1}. `values` holds
/// V(x_0) .. V(x_T); pass V(x_T) = 0 for an episode that really ended.
std::vector<double> compute_gae(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda);

enum class Decoding { kSample, kGreedy };

struct TrajectoryStep {
  Observation obs;
  int action = 0;
  double reward = 0.0;  // seconds, unscaled
  double log_prob = 0.0;
  double entropy = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Observation final_obs;
  bool truncated = false;  // stopped by the action cap or time limit
  double lifetime = 0.0;   // seconds

  std::vector<double> rewards() const;
};

/// Plays one episode with the actor. `env` must be freshly reset.
Trajectory rollout(Environment& env, const ActorParams& actor, Decoding decoding,
                   std::mt19937_64& rng);

struct TrainingState {
  ActorParams actor;
  CriticParams critic;
  AdamState actor_opt;
  AdamState critic_opt;
  int epoch = 0;  // completed epochs
};

TrainingState make_training_state(const TrainConfig& config);

struct EpisodeUpdate {
  double lifetime = 0.0;
  int length = 0;
  double mean_entropy = 0.0;
  double actor_loss = 0.0;   // per-step mean
  double critic_loss = 0.0;  // per-step mean
  bool skipped = false;      // an optimiser refused a non-finite gradient
};

/// Accumulates the episode's actor and critic gradients and applies one Adam
/// step to each network.
EpisodeUpdate update_from_trajectory(const Trajectory& traj, TrainingState& state,
                                     const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;
  double mean_lifetime_s = 0.0;
  double mean_len = 0.0;
  double mean_entropy = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double wallclock_s = 0.0;
  int skipped_updates = 0;
};

/// Seed for the `index`-th stream derived from `master` (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::uint64_t stream = 0);

/// One pass over `instances` in order: sample an episode, update, repeat.
/// Episode seeds depend only on (config.seed, epoch, instance index), so a
/// resumed run replays exactly. Increments state.epoch.
EpochMetrics train_epoch(std::span<const NetworkInstance> instances, const McParams& mc,
                         const SimConfig& sim, TrainingState& state,
                         const TrainConfig& config);

}  // namespace wrsn
