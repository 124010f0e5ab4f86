#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "wrsn/baselines.hpp"
#include "wrsn/network.hpp"
#include "wrsn/sim.hpp"
#include "wrsn/trainer.hpp"

namespace wrsn {

inline constexpr int kInstanceFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json instance_to_json(const NetworkInstance& instance);
/// Parses and validates. Throws FormatError on schema problems and
/// std::invalid_argument when the topology violates an instance invariant.
NetworkInstance instance_from_json(const nlohmann::json& doc);

void save_instance(const std::filesystem::path& path, const NetworkInstance& instance);
NetworkInstance load_instance(const std::filesystem::path& path);

/// File name used for instance `index` inside a generated set.
std::string instance_file_name(int index);

/// Loads every instance_*.json in `dir`, sorted by name. Throws if `dir` is
/// not a directory.
std::vector<NetworkInstance> load_instance_dir(const std::filesystem::path& dir);

/// Everything a run needs besides instances: charger, simulator, training and
/// baseline settings.
struct RunConfig {
  McParams mc;
  SimConfig sim;
  TrainConfig train;
  BaselineOptions baselines;
  std::uint64_t seed = 1;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

nlohmann::json config_to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace wrsn
