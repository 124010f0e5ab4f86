#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrsn/geometry.hpp"

namespace wrsn {

/// First-order radio model coefficients. Defaults are the usual
/// 50 nJ/bit electronics, 10 pJ/bit/m^2 free space, 0.0013 pJ/bit/m^4
/// multipath values.
struct RadioConstants {
  double eps_elec = 50e-9;    // J/bit
  double eps_fs = 10e-12;     // J/bit/m^2
  double eps_mp = 0.0013e-12; // J/bit/m^4

  /// Distance at which the free-space and multipath amplifier models meet.
  double crossover_distance() const;

  void validate() const;
};

/// Raised when a link longer than the communication range is used for
/// dissipation accounting.
class UnreachableLink : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Energy to transmit `bits` over `distance` metres. Returns std::nullopt when
/// the receiver is beyond `comm_range`; that is an ordinary answer, not an
/// error, since routing probes out-of-range pairs all the time.
std::optional<double> transmit_energy(double bits, double distance,
                                      const RadioConstants& radio,
                                      double comm_range);

double receive_energy(double bits, const RadioConstants& radio);

/// Energy spent by a node that receives `relayed` packets, generates
/// `generated` packets of its own, and forwards all of them over a link of
/// length `distance`. Accepts fractional packet counts so the same formula
/// serves expected-rate accounting. Throws UnreachableLink if
/// `distance > comm_range`.
double node_dissipation(double relayed, double generated, double distance,
                        double bits, const RadioConstants& radio,
                        double comm_range);

/// Immutable network topology plus the device constants shared by every
/// sensor. Lengths in metres, energies in joules.
struct NetworkInstance {
  std::vector<Vec2> sensors;
  std::vector<Vec2> targets;
  Vec2 base_station{100.0, 100.0};
  Vec2 depot{0.0, 0.0};
  double sensing_range = 40.0;
  double comm_range = 80.0;
  double sensor_capacity = 10.0;
  double packet_bits = 2000.0;
  RadioConstants radio;
  Vec2 area{200.0, 200.0};  // width, height

  std::size_t num_sensors() const { return sensors.size(); }
  std::size_t num_targets() const { return targets.size(); }

  /// Throws std::invalid_argument describing the first violated invariant
  /// (sizes, ranges, positions inside the area, initial coverage and
  /// connectivity).
  void validate() const;
};

/// Per-sensor count of targets within sensing range.
std::vector<int> targets_covered(const NetworkInstance& instance);

/// Minimum-hop routing tree rooted at the base station.
struct RoutingTree {
  static constexpr int kBaseStation = -1;
  static constexpr int kDetached = -2;

  std::vector<int> parent;        // sensor index, kBaseStation or kDetached
  std::vector<int> hop_count;     // 0 when detached
  std::vector<double> link_len;   // 0 when detached
  std::vector<int> bfs_order;     // attached sensors, nondecreasing hop count

  bool attached(std::size_t i) const { return parent[i] != kDetached; }
  std::size_t size() const { return parent.size(); }
};

/// BFS from the base station over active sensors, edges iff distance <=
/// comm_range. Equal-hop parent candidates are ranked by link length, then
/// index. Inactive or unreachable sensors are kDetached.
RoutingTree build_routing_tree(const NetworkInstance& instance,
                               const std::vector<bool>& active);

/// True iff every target has at least one active sensor within sensing range.
bool check_coverage(const NetworkInstance& instance,
                    const std::vector<bool>& active);

/// True iff every active source sensor (one that covers a target) reaches the
/// base station through active sensors.
bool check_connectivity(const NetworkInstance& instance,
                        const std::vector<bool>& active);

/// Same check against a tree already built for `active`.
bool check_connectivity(const std::vector<int>& coverage_counts,
                        const std::vector<bool>& active,
                        const RoutingTree& tree);

/// Per-sensor energy consumption rate (W) when sensor i originates
/// traffic[i] packets/s and forwards everything from its subtree.
std::vector<double> instantaneous_ecr(const NetworkInstance& instance,
                                      const RoutingTree& routing,
                                      const std::vector<double>& traffic);

}  // namespace wrsn
