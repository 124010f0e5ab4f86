#pragma once

#include <cstdint>
#include <stdexcept>

#include "wrsn/network.hpp"

namespace wrsn {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeneratorOptions {
  // Device constants, depot and radio model are copied from here; positions
  // and area are overwritten.
  NetworkInstance prototype;
  // Place the base station at the centre of the area; otherwise keep the
  // prototype's position.
  bool center_base_station = true;
  int max_attempts = 10000;
};

/// Uniform i.i.d. sensor and target positions in [0, w] x [0, h], resampled
/// until every target is covered and every sensor routes to the base station.
/// Deterministic in `seed`. Throws GenerationError after max_attempts.
NetworkInstance generate_instance(int num_sensors, int num_targets, Vec2 area,
                                  std::uint64_t seed,
                                  const GeneratorOptions& options = {});

}  // namespace wrsn
