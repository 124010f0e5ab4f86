#include "wrsn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wrsn {

namespace {

// Reference scales for the static charger and sensor features.
constexpr double kRefMcCapacity = 500.0;
constexpr double kRefSpeed = 5.0;
constexpr double kRefChargeRate = 0.04;
constexpr double kRefMoveCost = 0.04;
constexpr double kRefSensorCapacity = 10.0;

constexpr double kTimeEps = 1e-12;

}  // namespace

void McParams::validate() const {
  if (!(capacity > 0.0) || !(speed > 0.0) || !(charge_rate > 0.0) ||
      !(move_cost > 0.0) || !(initial_energy > 0.0)) {
    throw std::invalid_argument("charger parameters must be positive");
  }
  if (initial_energy > capacity) {
    throw std::invalid_argument("charger initial energy exceeds its capacity");
  }
}

std::string to_string(TrafficMode mode) {
  return mode == TrafficMode::kExpected ? "expected" : "stochastic";
}

TrafficMode traffic_mode_from_string(const std::string& name) {
  if (name == "expected") return TrafficMode::kExpected;
  if (name == "stochastic") return TrafficMode::kStochastic;
  throw std::invalid_argument("unknown traffic mode '" + name + "'");
}

void SimConfig::validate() const {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("kappa must lie in [0, 1]");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (action_cap < 1) throw std::invalid_argument("action cap must be >= 1");
  if (!(notify_period > 0.0)) {
    throw std::invalid_argument("notification period must be positive");
  }
  if (ecr_window < 2) throw std::invalid_argument("ECR window must be >= 2");
  if (!(max_time > 0.0)) throw std::invalid_argument("max_time must be positive");
}

std::string to_string(Termination cause) {
  switch (cause) {
    case Termination::kNone: return "none";
    case Termination::kConstraint: return "constraint";
    case Termination::kStranded: return "stranded";
    case Termination::kActionCap: return "action_cap";
    case Termination::kTimeLimit: return "time_limit";
  }
  return "unknown";
}

double estimate_ecr(std::span<const EnergySample> profile) {
  if (profile.size() < 2) return 0.0;
  double mean_t = 0.0;
  double mean_e = 0.0;
  for (const auto& s : profile) {
    mean_t += s.time;
    mean_e += s.residual;
  }
  mean_t /= static_cast<double>(profile.size());
  mean_e /= static_cast<double>(profile.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& s : profile) {
    sxx += (s.time - mean_t) * (s.time - mean_t);
    sxy += (s.time - mean_t) * (s.residual - mean_e);
  }
  if (!(sxx > 0.0)) return 0.0;
  return std::max(0.0, -sxy / sxx);
}

double charge_duration(double residual, double capacity, double charge_rate,
                       double ecr, bool* clamped) {
  if (clamped) *clamped = false;
  if (residual >= capacity) return 0.0;
  double drain = std::max(0.0, ecr);
  if (drain > 0.9 * charge_rate) {
    drain = 0.9 * charge_rate;
    if (clamped) *clamped = true;
  }
  return (capacity - residual) / (charge_rate - drain);
}

double mc_action_cost(double distance, double charge_time, double charge_rate,
                      double move_cost) {
  return distance * move_cost + charge_rate * charge_time;
}

Environment::Environment(NetworkInstance instance, McParams mc, SimConfig config)
    : instance_(std::move(instance)), mc_(mc), config_(config) {
  instance_.validate();
  mc_.validate();
  config_.validate();
  coverage_ = targets_covered(instance_);
}

Observation Environment::reset(std::uint64_t seed) {
  const std::size_t n = instance_.num_sensors();
  rng_.seed(seed);
  state_ = SimState{};
  state_.mc_pos = instance_.depot;
  state_.mc_energy = mc_.initial_energy;
  state_.sensor_energy.assign(n, instance_.sensor_capacity);
  state_.sensor_active.assign(n, true);
  state_.ecr_estimate.assign(n, 0.0);
  state_.ever_depleted.assign(n, false);
  state_.last_charged_at.assign(n, -1.0);
  profiles_.assign(n, {});
  charging_sensor_ = -1;
  traffic_.assign(n, 0.0);
  if (config_.mode == TrafficMode::kExpected) {
    for (std::size_t i = 0; i < n; ++i) traffic_[i] = config_.kappa * coverage_[i];
  }
  on_topology_change();
  // Initial estimates stay at zero until two notifications exist.
  if (config_.oracle_ecr) state_.ecr_estimate = expected_ecr_;
  next_notify_ = 0.0;
  record_notifications();
  started_ = true;
  return observe();
}

void Environment::on_topology_change() {
  const std::size_t n = instance_.num_sensors();
  state_.routing = build_routing_tree(instance_, state_.sensor_active);
  std::vector<double> expected(n);
  for (std::size_t i = 0; i < n; ++i) expected[i] = config_.kappa * coverage_[i];
  expected_ecr_ = instantaneous_ecr(instance_, state_.routing, expected);
  true_ecr_ = config_.mode == TrafficMode::kExpected
                  ? expected_ecr_
                  : instantaneous_ecr(instance_, state_.routing, traffic_);
  state_.alive = check_coverage(instance_, state_.sensor_active) &&
                 check_connectivity(coverage_, state_.sensor_active, state_.routing);
  if (config_.oracle_ecr) state_.ecr_estimate = expected_ecr_;
}

void Environment::draw_traffic() {
  std::bernoulli_distribution sends(config_.kappa);
  for (std::size_t i = 0; i < traffic_.size(); ++i) {
    traffic_[i] = sends(rng_) ? static_cast<double>(coverage_[i]) : 0.0;
  }
  true_ecr_ = instantaneous_ecr(instance_, state_.routing, traffic_);
}

void Environment::refresh_estimate(std::size_t i) {
  if (config_.oracle_ecr) return;
  const auto& p = profiles_[i];
  if (p.size() < 2) return;  // keep the previous estimate until refilled
  state_.ecr_estimate[i] = estimate_ecr(p);
}

void Environment::record_notifications() {
  while (state_.time + kTimeEps >= next_notify_) {
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
      if (!state_.sensor_active[i] || static_cast<int>(i) == charging_sensor_) continue;
      auto& p = profiles_[i];
      p.push_back({state_.time, state_.sensor_energy[i]});
      if (p.size() > static_cast<std::size_t>(config_.ecr_window)) {
        p.erase(p.begin(), p.end() - config_.ecr_window);
      }
      refresh_estimate(i);
    }
    next_notify_ += config_.notify_period;
  }
}

double Environment::advance(double duration, Activity activity,
                            const Motion& motion, int sensor, StepInfo* info) {
  const double start = state_.time;
  const std::size_t n = instance_.num_sensors();
  const double cap = instance_.sensor_capacity;
  double remaining = std::min(duration, std::max(0.0, config_.max_time - state_.time));
  double travelled = 0.0;

  double mc_rate = 0.0;
  switch (activity) {
    case Activity::kIdle: mc_rate = 0.0; break;
    case Activity::kTravel: mc_rate = -mc_.move_cost * mc_.speed; break;
    case Activity::kChargeSensor: mc_rate = -mc_.charge_rate; break;
    case Activity::kChargeSelf: mc_rate = mc_.charge_rate; break;
  }

  while (remaining > kTimeEps && !state_.terminal()) {
    double h = std::min(config_.dt, remaining);
    if (config_.mode == TrafficMode::kStochastic) {
      draw_traffic();
    } else if (next_notify_ - state_.time > kTimeEps) {
      // Rates are constant between events, so jump to the next notification.
      h = std::min(remaining, next_notify_ - state_.time);
    }
    while (h > kTimeEps) {
      if (mc_rate < 0.0 && state_.mc_energy <= 0.0) {
        state_.mc_energy = 0.0;
        state_.mc_stranded = true;
        return state_.time - start;
      }
      double tau = h;
      int dying = -1;
      bool mc_out = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!state_.sensor_active[i]) continue;
        double net = true_ecr_[i];
        if (activity == Activity::kChargeSensor && static_cast<int>(i) == sensor) {
          net -= mc_.charge_rate;
        }
        if (net > 0.0 && state_.sensor_energy[i] < net * tau) {
          tau = state_.sensor_energy[i] / net;
          dying = static_cast<int>(i);
        }
      }
      if (mc_rate < 0.0 && state_.mc_energy < -mc_rate * tau) {
        tau = state_.mc_energy / -mc_rate;
        dying = -1;
        mc_out = true;
      }

      for (std::size_t i = 0; i < n; ++i) {
        if (!state_.sensor_active[i]) continue;
        double net = true_ecr_[i];
        if (activity == Activity::kChargeSensor && static_cast<int>(i) == sensor) {
          net -= mc_.charge_rate;
        }
        state_.sensor_energy[i] =
            std::clamp(state_.sensor_energy[i] - net * tau, 0.0, cap);
        state_.energy_consumed += true_ecr_[i] * tau;
      }
      state_.mc_energy = std::clamp(state_.mc_energy + mc_rate * tau, 0.0, mc_.capacity);
      if (info) {
        if (mc_rate < 0.0) info->mc_energy_used += -mc_rate * tau;
        if (activity == Activity::kChargeSensor) {
          info->energy_delivered += mc_.charge_rate * tau;
        }
      }
      if (activity == Activity::kTravel && motion.length > 0.0) {
        travelled += mc_.speed * tau;
        state_.mc_pos = lerp(motion.from, motion.to, std::min(1.0, travelled / motion.length));
      }
      state_.time += tau;
      h -= tau;
      remaining -= tau;
      record_notifications();

      if (dying >= 0) state_.sensor_energy[dying] = 0.0;
      bool died = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (state_.sensor_active[i] && state_.sensor_energy[i] <= 0.0 &&
            !(activity == Activity::kChargeSensor && static_cast<int>(i) == sensor)) {
          state_.sensor_energy[i] = 0.0;
          state_.sensor_active[i] = false;
          state_.ever_depleted[i] = true;
          profiles_[i].clear();
          died = true;
        }
      }
      if (died) {
        on_topology_change();
        if (!state_.alive) {
          state_.termination = Termination::kConstraint;
          return state_.time - start;
        }
      }
      if (mc_out) {
        state_.mc_energy = 0.0;
        state_.mc_stranded = true;
        return state_.time - start;
      }
    }
  }
  return state_.time - start;
}

void Environment::fast_forward_to_death() {
  advance(std::max(0.0, config_.max_time - state_.time), Activity::kIdle);
  state_.termination = state_.terminal() ? Termination::kStranded : Termination::kTimeLimit;
}

StepResult Environment::finish(double start_time, StepInfo info) {
  if (!state_.terminal() && state_.time >= config_.max_time) {
    state_.termination = Termination::kTimeLimit;
  }
  StepResult result;
  result.reward = state_.time - start_time;
  result.terminal = state_.terminal();
  info.cause = state_.termination;
  result.info = info;
  result.next_obs = observe();
  return result;
}

StepResult Environment::step(int action) {
  if (!started_) throw std::logic_error("step() before reset()");
  if (state_.terminal()) throw std::logic_error("step() on a terminated episode");
  const std::size_t n = instance_.num_sensors();
  if (action < 0 || action > static_cast<int>(n)) {
    throw std::out_of_range("action " + std::to_string(action) +
                            " outside [0, " + std::to_string(n) + "]");
  }
  const double start = state_.time;
  StepInfo info;
  info.action = action;

  const Vec2 dest = action == 0 ? instance_.depot : instance_.sensors[action - 1];
  const double length = distance(state_.mc_pos, dest);
  if (length > 0.0) {
    const Motion motion{state_.mc_pos, dest, length};
    info.travel_time = advance(length / mc_.speed, Activity::kTravel, motion, -1, &info);
    info.travel_distance = info.travel_time * mc_.speed;
    if (!state_.terminal() && !state_.mc_stranded) state_.mc_pos = dest;
  }

  if (!state_.terminal() && !state_.mc_stranded) {
    if (action == 0) {
      const double t = (mc_.capacity - state_.mc_energy) / mc_.charge_rate;
      info.charge_time = advance(t, Activity::kChargeSelf, {}, -1, &info);
      if (!state_.terminal() && info.charge_time + kTimeEps >= t) {
        state_.mc_energy = mc_.capacity;
      }
    } else {
      const int i = action - 1;
      const double t = charge_duration(state_.sensor_energy[i], instance_.sensor_capacity,
                                       mc_.charge_rate, state_.ecr_estimate[i],
                                       &info.ecr_clamped);
      if (t > 0.0) {
        charging_sensor_ = i;
        profiles_[i].clear();
        if (!state_.sensor_active[i]) {
          state_.sensor_active[i] = true;
          on_topology_change();
        }
        info.charge_time = advance(t, Activity::kChargeSensor, {}, i, &info);
        charging_sensor_ = -1;
        if (!state_.terminal() && !state_.mc_stranded) {
          state_.last_charged_at[i] = state_.time;
        }
        if (state_.sensor_energy[i] <= 0.0 && !state_.terminal()) {
          // Charging never got going (MC was already empty).
          state_.sensor_active[i] = false;
          on_topology_change();
          if (!state_.alive) state_.termination = Termination::kConstraint;
        }
      } else {
        state_.last_charged_at[i] = state_.time;
      }
    }
  }

  if (state_.mc_stranded && !state_.terminal()) fast_forward_to_death();
  ++state_.actions_taken;
  if (!state_.terminal() && state_.actions_taken >= config_.action_cap) {
    state_.termination = Termination::kActionCap;
  }
  return finish(start, info);
}

StepResult Environment::wait(double seconds) {
  if (!started_) throw std::logic_error("wait() before reset()");
  if (state_.terminal()) throw std::logic_error("wait() on a terminated episode");
  if (!(seconds >= 0.0)) throw std::invalid_argument("wait duration must be >= 0");
  const double start = state_.time;
  StepInfo info;
  info.action = -1;
  advance(seconds, Activity::kIdle, {}, -1, &info);
  return finish(start, info);
}

void Environment::set_sensor_energy(std::size_t sensor, double joules) {
  if (!started_) throw std::logic_error("set_sensor_energy() before reset()");
  if (sensor >= instance_.num_sensors()) throw std::out_of_range("sensor index");
  if (!(joules >= 0.0 && joules <= instance_.sensor_capacity)) {
    throw std::invalid_argument("sensor energy outside [0, capacity]");
  }
  state_.sensor_energy[sensor] = joules;
  profiles_[sensor].clear();
  const bool on = joules > 0.0;
  if (on != state_.sensor_active[sensor]) {
    state_.sensor_active[sensor] = on;
    if (!on) state_.ever_depleted[sensor] = true;
    on_topology_change();
    if (!state_.alive && !state_.terminal()) state_.termination = Termination::kConstraint;
  }
}

void Environment::set_mc_energy(double joules) {
  if (!started_) throw std::logic_error("set_mc_energy() before reset()");
  if (!(joules >= 0.0 && joules <= mc_.capacity)) {
    throw std::invalid_argument("charger energy outside [0, capacity]");
  }
  state_.mc_energy = joules;
}

Observation Environment::observe() const {
  const std::size_t n = instance_.num_sensors();
  Observation obs;
  obs.mc.resize(Observation::kMcFeatures);
  obs.mc << mc_.capacity / kRefMcCapacity, mc_.speed / kRefSpeed,
      mc_.charge_rate / kRefChargeRate, mc_.move_cost / kRefMoveCost,
      state_.mc_pos.x / instance_.area.x, state_.mc_pos.y / instance_.area.y,
      state_.mc_energy / mc_.capacity;
  obs.depot.resize(Observation::kDepotFeatures);
  obs.depot << instance_.depot.x / instance_.area.x, instance_.depot.y / instance_.area.y;
  obs.sensors.resize(Observation::kSensorFeatures, static_cast<Eigen::Index>(n));
  const double m = static_cast<double>(instance_.num_targets());
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    obs.sensors(0, c) = instance_.sensor_capacity / kRefSensorCapacity;
    obs.sensors(1, c) = instance_.sensors[i].x / instance_.area.x;
    obs.sensors(2, c) = instance_.sensors[i].y / instance_.area.y;
    obs.sensors(3, c) = coverage_[i] / m;
    obs.sensors(4, c) = state_.sensor_energy[i] / instance_.sensor_capacity;
    obs.sensors(5, c) = state_.ecr_estimate[i] / mc_.charge_rate;
  }
  return obs;
}

}  // namespace wrsn
