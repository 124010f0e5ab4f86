#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "wrsn/generator.hpp"
#include "wrsn/network.hpp"
#include "wrsn/sim.hpp"

namespace wrsn::test {

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Adjacency over {sensors, BS}; the BS is node n. Inactive sensors have no edges.
inline std::vector<std::vector<bool>> adjacency(const NetworkInstance& inst,
                                                const std::vector<bool>& active) {
  const std::size_t n = inst.num_sensors();
  std::vector<std::vector<bool>> adj(n + 1, std::vector<bool>(n + 1, false));
  auto pos = [&](std::size_t i) { return i == n ? inst.base_station : inst.sensors[i]; };
  auto on = [&](std::size_t i) { return i == n || active[i]; };
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j)
      if (i != j && on(i) && on(j) && distance(pos(i), pos(j)) <= inst.comm_range)
        adj[i][j] = true;
  return adj;
}

// Floyd-Warshall hop distances to the BS; -1 when unreachable.
inline std::vector<int> brute_hops(const NetworkInstance& inst, const std::vector<bool>& active) {
  const std::size_t n = inst.num_sensors();
  const int inf = std::numeric_limits<int>::max() / 4;
  auto adj = adjacency(inst, active);
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(n + 1, inf));
  for (std::size_t i = 0; i <= n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = 0; j <= n; ++j)
      if (adj[i][j]) d[i][j] = 1;
  }
  for (std::size_t k = 0; k <= n; ++k)
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j <= n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = (active[i] && d[i][n] < inf) ? d[i][n] : -1;
  return out;
}

// Depth-first enumeration of simple paths; only the existence of one matters.
inline bool path_exists(const std::vector<std::vector<bool>>& adj, std::size_t from,
                        std::size_t to, std::vector<bool>& seen) {
  if (from == to) return true;
  seen[from] = true;
  for (std::size_t j = 0; j < adj.size(); ++j)
    if (adj[from][j] && !seen[j] && path_exists(adj, j, to, seen)) return true;
  return false;
}

inline bool brute_coverage(const NetworkInstance& inst, const std::vector<bool>& active) {
  for (const auto& t : inst.targets) {
    bool hit = false;
    for (std::size_t i = 0; i < inst.num_sensors(); ++i)
      hit = hit || (active[i] && distance(inst.sensors[i], t) <= inst.sensing_range);
    if (!hit) return false;
  }
  return true;
}

inline bool brute_connectivity(const NetworkInstance& inst, const std::vector<bool>& active) {
  const std::size_t n = inst.num_sensors();
  auto adj = adjacency(inst, active);
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    bool source = false;
    for (const auto& t : inst.targets)
      source = source || distance(inst.sensors[i], t) <= inst.sensing_range;
    if (!source) continue;
    std::vector<bool> seen(n + 1, false);
    if (!path_exists(adj, i, n, seen)) return false;
  }
  return true;
}

// Random placement without the validity guarantee, for oracle comparisons.
inline NetworkInstance random_layout(int n, int m, std::mt19937_64& rng, double side = 200.0) {
  std::uniform_real_distribution<double> u(0.0, side);
  NetworkInstance inst;
  inst.area = {side, side};
  inst.base_station = {side / 2, side / 2};
  for (int i = 0; i < n; ++i) inst.sensors.push_back({u(rng), u(rng)});
  for (int k = 0; k < m; ++k) inst.targets.push_back({u(rng), u(rng)});
  return inst;
}

inline std::vector<bool> random_mask(std::size_t n, std::mt19937_64& rng, double p_on = 0.8) {
  std::bernoulli_distribution b(p_on);
  std::vector<bool> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = b(rng);
  return mask;
}

inline Observation random_observation(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Observation obs;
  obs.mc = Eigen::VectorXd::NullaryExpr(Observation::kMcFeatures, [&] { return u(rng); });
  obs.depot = Eigen::VectorXd::NullaryExpr(Observation::kDepotFeatures, [&] { return u(rng); });
  obs.sensors = Eigen::MatrixXd::NullaryExpr(Observation::kSensorFeatures, n, [&] { return u(rng); });
  return obs;
}

// One sensor, one target next to it, BS and depot nearby.
inline NetworkInstance single_sensor(Vec2 sensor = {5.0, 0.0}) {
  NetworkInstance inst;
  inst.sensors = {sensor};
  inst.targets = {{sensor.x, sensor.y + 1.0}};
  inst.base_station = {sensor.x + 10.0, sensor.y};
  inst.depot = {0.0, 0.0};
  inst.area = {200.0, 200.0};
  return inst;
}

inline NetworkInstance default_instance(std::uint64_t seed, int n = 20, int m = 10) {
  return generate_instance(n, m, {200.0, 200.0}, seed);
}

}  // namespace wrsn::test
