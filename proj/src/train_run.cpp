#include "wrsn/train_run.hpp"

#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>

namespace wrsn {

const char* const kMetricsCsvHeader =
    "epoch,mean_lifetime_s,mean_len,mean_entropy,actor_loss,critic_loss,wallclock_s";

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint_%04d.ckpt", epoch);
  return dir / buf;
}

TrainRunResult run_training(const std::vector<NetworkInstance>& instances, const RunConfig& config,
                            const TrainRunOptions& options,
                            const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.train.validate();
  if (instances.empty()) throw std::invalid_argument("training needs at least one instance");
  const std::size_t used =
      std::min(instances.size(), static_cast<std::size_t>(config.train.instances_per_epoch));
  if (used == 0) throw std::invalid_argument("instances_per_epoch must be >= 1");
  const std::span<const NetworkInstance> set(instances.data(), used);

  TrainRunResult res{make_training_state(config.train), {}, {}};
  if (options.resume) {
    Checkpoint ck = load_checkpoint(*options.resume);
    if (ck.state.actor.shape().latent != config.train.latent) {
      throw CheckpointError("checkpoint latent width " +
                            std::to_string(ck.state.actor.shape().latent) +
                            " does not match config latent " +
                            std::to_string(config.train.latent));
    }
    res.state = std::move(ck.state);
  }

  std::filesystem::create_directories(options.out_dir);
  const auto metrics_path = options.out_dir / "metrics.csv";
  const bool append = options.resume && std::filesystem::exists(metrics_path);
  std::ofstream log(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + metrics_path.string());
  log.precision(17);
  if (!append) log << kMetricsCsvHeader << '\n';

  nlohmann::json meta = options.metadata;
  meta["instances_used"] = used;
  auto save = [&](const std::filesystem::path& p) {
    save_checkpoint(p, Checkpoint{res.state, config.train, meta});
  };

  while (res.state.epoch < config.train.epochs) {
    const EpochMetrics m = train_epoch(set, config.mc, config.sim, res.state, config.train);
    log << m.epoch << ',' << m.mean_lifetime_s << ',' << m.mean_len << ',' << m.mean_entropy
        << ',' << m.actor_loss << ',' << m.critic_loss << ',' << m.wallclock_s << '\n';
    log.flush();
    res.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
    if (config.train.checkpoint_every > 0 && m.epoch % config.train.checkpoint_every == 0) {
      save(checkpoint_path(options.out_dir, m.epoch));
    }
  }
  res.final_checkpoint = options.out_dir / "final.ckpt";
  save(res.final_checkpoint);
  return res;
}

}  // namespace wrsn
