#include "wrsn/generator.hpp"

#include <random>
#include <sstream>
#include <vector>

namespace wrsn {

namespace {

bool feasible(const NetworkInstance& instance) {
  const std::vector<bool> all(instance.num_sensors(), true);
  if (!check_coverage(instance, all)) return false;
  const RoutingTree tree = build_routing_tree(instance, all);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!tree.attached(i)) return false;
  }
  return true;
}

}  // namespace

NetworkInstance generate_instance(int num_sensors, int num_targets, Vec2 area,
                                  std::uint64_t seed,
                                  const GeneratorOptions& options) {
  if (num_sensors < 1 || num_targets < 1) {
    throw std::invalid_argument("need at least one sensor and one target");
  }
  if (!(area.x > 0.0) || !(area.y > 0.0)) {
    throw std::invalid_argument("area must have positive extent");
  }
  NetworkInstance instance = options.prototype;
  instance.area = area;
  if (options.center_base_station) instance.base_station = {area.x / 2.0, area.y / 2.0};
  instance.sensors.resize(static_cast<std::size_t>(num_sensors));
  instance.targets.resize(static_cast<std::size_t>(num_targets));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, area.x);
  std::uniform_real_distribution<double> uy(0.0, area.y);
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    for (auto& p : instance.sensors) p = {ux(rng), uy(rng)};
    for (auto& q : instance.targets) q = {ux(rng), uy(rng)};
    if (feasible(instance)) {
      instance.validate();
      return instance;
    }
  }
  std::ostringstream msg;
  msg << "no covered and connected placement of " << num_sensors << " sensors and "
      << num_targets << " targets in " << area.x << " x " << area.y
      << " (r_s=" << instance.sensing_range << ", r_c=" << instance.comm_range
      << ") after " << options.max_attempts << " attempts, seed " << seed;
  throw GenerationError(msg.str());
}

}  // namespace wrsn
