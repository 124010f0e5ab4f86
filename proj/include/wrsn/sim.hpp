#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wrsn/network.hpp"

namespace wrsn {

/// Mobile charger device constants. Defaults follow the usual 500 J / 5 m/s /
/// 0.04 J/s / 0.04 J/m configuration with a deliberately low 50 J start.
struct McParams {
  double capacity = 500.0;       // J
  double speed = 5.0;            // m/s
  double charge_rate = 0.04;     // J/s, both MC->sensor and depot->MC
  double move_cost = 0.04;       // J/m
  double initial_energy = 50.0;  // J

  void validate() const;
};

enum class TrafficMode {
  kExpected,    // kappa * zeta_i packets/s, deterministic
  kStochastic,  // zeta_i packets with probability kappa, redrawn every substep
};

std::string to_string(TrafficMode mode);
TrafficMode traffic_mode_from_string(const std::string& name);

struct SimConfig {
  double kappa = 0.8;          // per-target packet probability per second
  double dt = 1.0;             // substep length, s
  TrafficMode mode = TrafficMode::kStochastic;
  bool oracle_ecr = false;     // expose true expected ECR instead of estimates
  int action_cap = 2000;
  double notify_period = 10.0; // residual-energy notification period, s
  int ecr_window = 5;          // notifications used by the ECR fit
  double max_time = 1e7;       // hard stop for degenerate (never-dying) runs

  void validate() const;
};

enum class Termination {
  kNone,
  kConstraint,  // coverage or connectivity lost
  kStranded,    // MC depleted away from the depot; network ran to death
  kActionCap,
  kTimeLimit,
};

std::string to_string(Termination cause);

struct EnergySample {
  double time;      // s
  double residual;  // J
};

/// Negated least-squares slope of residual energy over time, clamped at 0.
/// Fewer than two samples (or zero time spread) yields 0.
double estimate_ecr(std::span<const EnergySample> profile);

/// Seconds to fill a sensor from `residual` to `capacity` while it keeps
/// drawing `ecr`. The drain is capped at 0.9 * charge_rate; `clamped` reports
/// whether the cap was hit.
double charge_duration(double residual, double capacity, double charge_rate,
                       double ecr, bool* clamped = nullptr);

/// MC energy for travelling `distance` and then charging for `charge_time`.
double mc_action_cost(double distance, double charge_time, double charge_rate,
                      double move_cost);

struct SimState {
  double time = 0.0;
  Vec2 mc_pos;
  double mc_energy = 0.0;
  std::vector<double> sensor_energy;
  std::vector<bool> sensor_active;
  std::vector<double> ecr_estimate;  // W, as seen by the charger
  RoutingTree routing;
  bool alive = true;
  int actions_taken = 0;

  bool mc_stranded = false;
  Termination termination = Termination::kNone;
  std::vector<bool> ever_depleted;
  std::vector<double> last_charged_at;  // completion time of last full charge, -1 if never
  double energy_consumed = 0.0;          // total sensor dissipation so far, J

  bool terminal() const { return termination != Termination::kNone; }
};

/// Normalised agent view. Columns of `sensors` are per-sensor feature vectors.
struct Observation {
  static constexpr int kMcFeatures = 7;
  static constexpr int kDepotFeatures = 2;
  static constexpr int kSensorFeatures = 6;

  Eigen::VectorXd mc;       // c_mc, v, mu, w_move (/ reference), x, y (/ area), e_mc / c_mc
  Eigen::VectorXd depot;    // x, y (/ area)
  Eigen::MatrixXd sensors;  // rows: c_sn (/ reference), x, y, targets / m, e / c_sn, ecr / mu

  int num_sensors() const { return static_cast<int>(sensors.cols()); }
};

struct StepInfo {
  int action = 0;                // -1 for a wait
  double travel_distance = 0.0;  // m actually travelled
  double travel_time = 0.0;      // s
  double charge_time = 0.0;      // s spent transferring energy (sensor or self)
  double energy_delivered = 0.0; // J handed to the sensor
  double mc_energy_used = 0.0;   // J drawn from the MC battery (travel + delivery)
  bool ecr_clamped = false;
  Termination cause = Termination::kNone;
};

struct StepResult {
  Observation next_obs;
  double reward = 0.0;  // seconds
  bool terminal = false;
  StepInfo info;
};

/// Straight-line charger movement during one travel leg.
struct Motion {
  Vec2 from;
  Vec2 to;
  double length = 0.0;
};

/// Discrete-time WRSN simulator exposing reset / step / observe. Copyable;
/// copies evolve independently.
class Environment {
 public:
  Environment(NetworkInstance instance, McParams mc, SimConfig config);

  Observation reset(std::uint64_t seed);

  /// Action 0 returns to the depot and refills the MC; action i >= 1 charges
  /// sensor i - 1 to full. Throws std::out_of_range for a bad index and
  /// std::logic_error after termination.
  StepResult step(int action);

  /// Keeps the MC parked for `seconds` while the network runs. Not a charging
  /// action: it does not count toward the action cap.
  StepResult wait(double seconds);

  Observation observe() const;

  /// Scenario setup between steps. A sensor set to 0 J goes inactive and the
  /// network constraints are re-checked.
  void set_sensor_energy(std::size_t sensor, double joules);
  void set_mc_energy(double joules);

  const SimState& state() const { return state_; }
  const NetworkInstance& instance() const { return instance_; }
  const McParams& mc_params() const { return mc_; }
  const SimConfig& config() const { return config_; }
  const std::vector<int>& coverage_counts() const { return coverage_; }
  /// True expected-rate ECR of every sensor under the current routing.
  const std::vector<double>& expected_ecr() const { return expected_ecr_; }
  int num_actions() const { return static_cast<int>(instance_.num_sensors()) + 1; }

 private:
  enum class Activity { kIdle, kTravel, kChargeSensor, kChargeSelf };

  // Runs the network for up to `duration` seconds. Returns the time actually
  // simulated, which is shorter when the network dies or the MC runs dry.
  double advance(double duration, Activity activity, const Motion& motion = Motion{},
                 int sensor = -1, StepInfo* info = nullptr);
  void fast_forward_to_death();
  void on_topology_change();
  void draw_traffic();
  void record_notifications();
  void refresh_estimate(std::size_t i);
  StepResult finish(double start_time, StepInfo info);

  NetworkInstance instance_;
  McParams mc_;
  SimConfig config_;
  std::vector<int> coverage_;

  SimState state_;
  std::mt19937_64 rng_;
  std::vector<double> traffic_;       // packets/s originated per sensor
  std::vector<double> true_ecr_;      // current realised dissipation rate
  std::vector<double> expected_ecr_;  // expected-rate dissipation rate
  std::vector<std::vector<EnergySample>> profiles_;  // oldest first, at most ecr_window
  double next_notify_ = 0.0;
  int charging_sensor_ = -1;
  bool started_ = false;
};

}  // namespace wrsn
