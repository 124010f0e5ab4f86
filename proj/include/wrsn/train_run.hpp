#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"

#include "wrsn/checkpoint.hpp"
#include "wrsn/io.hpp"
#include "wrsn/trainer.hpp"

namespace wrsn {

extern const char* const kMetricsCsvHeader;

struct TrainRunOptions {
  std::filesystem::path out_dir;                // checkpoints and metrics.csv
  std::optional<std::filesystem::path> resume;  // continue from this checkpoint
  nlohmann::json metadata = nlohmann::json::object();
};

struct TrainRunResult {
  TrainingState state;
  std::vector<EpochMetrics> metrics;  // epochs run by this call only
  std::filesystem::path final_checkpoint;
};

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch);

/// Trains on the first `instances_per_epoch` instances until `epochs` epochs
/// are complete, writing a checkpoint every `checkpoint_every` epochs and
/// `final.ckpt` at the end. On resume the metrics log is appended to.
TrainRunResult run_training(const std::vector<NetworkInstance>& instances, const RunConfig& config,
                            const TrainRunOptions& options,
                            const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace wrsn
