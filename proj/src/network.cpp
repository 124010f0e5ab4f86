#include "wrsn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wrsn {

double RadioConstants::crossover_distance() const {
  return std::sqrt(eps_fs / eps_mp);
}

void RadioConstants::validate() const {
  if (!(eps_elec > 0.0) || !(eps_fs > 0.0) || !(eps_mp > 0.0)) {
    throw std::invalid_argument("radio coefficients must be positive");
  }
}

std::optional<double> transmit_energy(double bits, double distance,
                                      const RadioConstants& radio,
                                      double comm_range) {
  if (distance > comm_range) return std::nullopt;
  const double electronics = bits * radio.eps_elec;
  if (distance <= radio.crossover_distance()) {
    return electronics + bits * radio.eps_fs * distance * distance;
  }
  const double d2 = distance * distance;
  return electronics + bits * radio.eps_mp * d2 * d2;
}

double receive_energy(double bits, const RadioConstants& radio) {
  return bits * radio.eps_elec;
}

double node_dissipation(double relayed, double generated, double distance,
                        double bits, const RadioConstants& radio,
                        double comm_range) {
  if (relayed == 0.0 && generated == 0.0) return 0.0;
  const auto tx = transmit_energy(bits, distance, radio, comm_range);
  if (!tx) {
    std::ostringstream msg;
    msg << "link of " << distance << " m exceeds communication range "
        << comm_range << " m";
    throw UnreachableLink(msg.str());
  }
  return relayed * receive_energy(bits, radio) + (relayed + generated) * *tx;
}

namespace {

bool inside(const Vec2& p, const Vec2& area) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= area.x && p.y <= area.y;
}

}  // namespace

void NetworkInstance::validate() const {
  radio.validate();
  if (sensors.empty()) throw std::invalid_argument("instance has no sensors");
  if (targets.empty()) throw std::invalid_argument("instance has no targets");
  if (!(sensing_range > 0.0) || !(comm_range > 0.0)) {
    throw std::invalid_argument("ranges must be positive");
  }
  if (!(sensor_capacity > 0.0)) {
    throw std::invalid_argument("sensor capacity must be positive");
  }
  if (!(packet_bits >= 0.0)) {
    throw std::invalid_argument("packet size must be non-negative");
  }
  if (!(area.x > 0.0) || !(area.y > 0.0)) {
    throw std::invalid_argument("area must have positive extent");
  }
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (!inside(sensors[i], area)) {
      throw std::invalid_argument("sensor " + std::to_string(i) +
                                  " lies outside the area");
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (!inside(targets[k], area)) {
      throw std::invalid_argument("target " + std::to_string(k) +
                                  " lies outside the area");
    }
  }
  if (!inside(base_station, area) || !inside(depot, area)) {
    throw std::invalid_argument("base station and depot must lie inside the area");
  }
  const std::vector<bool> all(sensors.size(), true);
  if (!check_coverage(*this, all)) {
    throw std::invalid_argument("some target is not covered by any sensor");
  }
  // Every sensor, source or relay, must have a route initially.
  const RoutingTree tree = build_routing_tree(*this, all);
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (!tree.attached(i)) {
      throw std::invalid_argument("sensor " + std::to_string(i) +
                                  " has no route to the base station");
    }
  }
}

std::vector<int> targets_covered(const NetworkInstance& instance) {
  std::vector<int> counts(instance.num_sensors(), 0);
  for (std::size_t i = 0; i < instance.num_sensors(); ++i) {
    for (const auto& t : instance.targets) {
      if (distance(instance.sensors[i], t) <= instance.sensing_range) ++counts[i];
    }
  }
  return counts;
}

RoutingTree build_routing_tree(const NetworkInstance& instance,
                               const std::vector<bool>& active) {
  const std::size_t n = instance.num_sensors();
  if (active.size() != n) {
    throw std::invalid_argument("active mask size does not match sensor count");
  }
  RoutingTree tree;
  tree.parent.assign(n, RoutingTree::kDetached);
  tree.hop_count.assign(n, 0);
  tree.link_len.assign(n, 0.0);

  std::vector<int> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    const double l = distance(instance.sensors[i], instance.base_station);
    if (l <= instance.comm_range) {
      tree.parent[i] = RoutingTree::kBaseStation;
      tree.hop_count[i] = 1;
      tree.link_len[i] = l;
      frontier.push_back(static_cast<int>(i));
    }
  }
  int hops = 1;
  while (!frontier.empty()) {
    tree.bfs_order.insert(tree.bfs_order.end(), frontier.begin(), frontier.end());
    std::vector<int> next;
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || tree.attached(j)) continue;
      int best = RoutingTree::kDetached;
      double best_len = std::numeric_limits<double>::infinity();
      // Frontier is sorted by index, so strict < keeps the smallest index on ties.
      for (int f : frontier) {
        const double l = distance(instance.sensors[j], instance.sensors[f]);
        if (l <= instance.comm_range && l < best_len) {
          best = f;
          best_len = l;
        }
      }
      if (best != RoutingTree::kDetached) {
        next.push_back(static_cast<int>(j));
        tree.parent[j] = best;
        tree.link_len[j] = best_len;
        tree.hop_count[j] = hops + 1;
      }
    }
    frontier = std::move(next);
    ++hops;
  }
  return tree;
}

bool check_coverage(const NetworkInstance& instance,
                    const std::vector<bool>& active) {
  for (const auto& t : instance.targets) {
    bool covered = false;
    for (std::size_t i = 0; i < instance.num_sensors() && !covered; ++i) {
      covered = active[i] && distance(instance.sensors[i], t) <= instance.sensing_range;
    }
    if (!covered) return false;
  }
  return true;
}

bool check_connectivity(const std::vector<int>& coverage_counts,
                        const std::vector<bool>& active,
                        const RoutingTree& tree) {
  for (std::size_t i = 0; i < coverage_counts.size(); ++i) {
    if (active[i] && coverage_counts[i] > 0 && !tree.attached(i)) return false;
  }
  return true;
}

bool check_connectivity(const NetworkInstance& instance,
                        const std::vector<bool>& active) {
  return check_connectivity(targets_covered(instance), active,
                            build_routing_tree(instance, active));
}

std::vector<double> instantaneous_ecr(const NetworkInstance& instance,
                                      const RoutingTree& routing,
                                      const std::vector<double>& traffic) {
  const std::size_t n = instance.num_sensors();
  if (routing.size() != n || traffic.size() != n) {
    throw std::invalid_argument("routing/traffic size does not match sensor count");
  }
  // Packets per second arriving from children, accumulated leaves-first.
  std::vector<double> relayed(n, 0.0);
  for (auto it = routing.bfs_order.rbegin(); it != routing.bfs_order.rend(); ++it) {
    const int i = *it;
    const int p = routing.parent[i];
    if (p >= 0) relayed[p] += relayed[i] + traffic[i];
  }
  std::vector<double> ecr(n, 0.0);
  for (int i : routing.bfs_order) {
    ecr[i] = node_dissipation(relayed[i], traffic[i], routing.link_len[i],
                              instance.packet_bits, instance.radio,
                              instance.comm_range);
  }
  return ecr;
}

}  // namespace wrsn
