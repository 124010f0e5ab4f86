#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "json.hpp"

#include "wrsn/trainer.hpp"

namespace wrsn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  TrainingState state;
  TrainConfig config;
  nlohmann::json metadata = nlohmann::json::object();  // free-form, e.g. provenance of the run
};

/// Binary layout: 8-byte magic, u32 version, u64 header length, JSON header,
/// little-endian f64 arrays (actor, critic, actor m, actor v, critic m,
/// critic v) and a trailing CRC-32 of everything before it. Written to a
/// temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws CheckpointError on a bad magic, version, checksum or shape. Nothing
/// is returned unless the whole file checks out.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wrsn
