#include "wrsn/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace wrsn {

std::string to_string(RandomGuard guard) {
  return guard == RandomGuard::kService ? "service" : "return";
}

RandomGuard random_guard_from_string(const std::string& name) {
  if (name == "return") return RandomGuard::kReturnTrip;
  if (name == "service") return RandomGuard::kService;
  throw std::invalid_argument("unknown random guard '" + name + "'");
}

void RequestPool::update(const SimState& state, double sensor_capacity) {
  std::erase_if(requests_, [&](const ChargeRequest& r) {
    return state.last_charged_at[r.sensor] >= r.time ||
           state.sensor_energy[r.sensor] >= sensor_capacity;
  });
  for (std::size_t i = 0; i < state.sensor_energy.size(); ++i) {
    const int s = static_cast<int>(i);
    if (state.sensor_energy[i] < threshold_ * sensor_capacity && !contains(s)) {
      requests_.push_back({s, state.time});
    }
  }
}

bool RequestPool::contains(int sensor) const {
  return std::any_of(requests_.begin(), requests_.end(),
                     [&](const ChargeRequest& r) { return r.sensor == sensor; });
}

RequestPool update_request_pool(RequestPool pool, const SimState& state,
                                double sensor_capacity) {
  pool.update(state, sensor_capacity);
  return pool;
}

ServicePlan plan_service(const Environment& env, int sensor) {
  const auto& inst = env.instance();
  const auto& mc = env.mc_params();
  const auto& st = env.state();
  const Vec2 pos = inst.sensors.at(static_cast<std::size_t>(sensor));
  const double length = distance(st.mc_pos, pos);
  const double ecr = st.ecr_estimate[sensor];
  ServicePlan plan;
  plan.travel_time = length / mc.speed;
  const double arrival = std::max(0.0, st.sensor_energy[sensor] - ecr * plan.travel_time);
  plan.charge_time =
      charge_duration(arrival, inst.sensor_capacity, mc.charge_rate, ecr);
  plan.energy = mc_action_cost(length, plan.charge_time, mc.charge_rate, mc.move_cost);
  plan.return_energy = distance(pos, inst.depot) * mc.move_cost;
  return plan;
}

bool needs_depot(const Environment& env, const ServicePlan& plan, double margin) {
  return env.state().mc_energy < plan.energy + plan.return_energy + margin;
}

int njnp_policy(const Environment& env, const RequestPool& pool, double margin) {
  if (pool.empty()) return kIdle;
  const auto& st = env.state();
  int best = -1;
  double best_len = std::numeric_limits<double>::infinity();
  for (const auto& r : pool.requests()) {
    const double l = distance(st.mc_pos, env.instance().sensors[r.sensor]);
    if (l < best_len || (l == best_len && r.sensor < best)) {
      best = r.sensor;
      best_len = l;
    }
  }
  if (needs_depot(env, plan_service(env, best), margin)) return 0;
  return best + 1;
}

int inma_policy(const Environment& env, const RequestPool& pool, double margin) {
  if (pool.empty()) return kIdle;
  const auto& st = env.state();
  int best = -1;
  int best_deficit = std::numeric_limits<int>::max();
  double best_finish = std::numeric_limits<double>::infinity();
  ServicePlan best_plan;
  for (const auto& cand : pool.requests()) {
    const ServicePlan plan = plan_service(env, cand.sensor);
    const double finish = plan.finish_time();
    int deficit = 0;
    for (const auto& other : pool.requests()) {
      if (other.sensor == cand.sensor) continue;
      if (st.sensor_energy[other.sensor] - st.ecr_estimate[other.sensor] * finish <= 0.0) {
        ++deficit;
      }
    }
    const bool better =
        deficit < best_deficit ||
        (deficit == best_deficit &&
         (finish < best_finish || (finish == best_finish && cand.sensor < best)));
    if (better) {
      best = cand.sensor;
      best_deficit = deficit;
      best_finish = finish;
      best_plan = plan;
    }
  }
  if (needs_depot(env, best_plan, margin)) return 0;
  return best + 1;
}

int random_policy(const Environment& env, std::mt19937_64& rng, double margin,
                  RandomGuard guard) {
  const int n = static_cast<int>(env.instance().num_sensors());
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int sensor = pick(rng);
  const auto& st = env.state();
  if (guard == RandomGuard::kService) {
    if (needs_depot(env, plan_service(env, sensor), margin)) return 0;
  } else {
    const double home = env.mc_params().move_cost * distance(st.mc_pos, env.instance().depot);
    if (st.mc_energy < home + margin) return 0;
  }
  return sensor + 1;
}

int RandomPolicy::decide(const Environment& env, std::mt19937_64& rng) {
  return random_policy(env, rng, options_.margin, options_.random_guard);
}

void NjnpPolicy::begin_episode(const Environment& /*env*/) {
  pool_ = RequestPool(options_.threshold);
}

int NjnpPolicy::decide(const Environment& env, std::mt19937_64& /*rng*/) {
  pool_.update(env.state(), env.instance().sensor_capacity);
  return njnp_policy(env, pool_, options_.margin);
}

void InmaPolicy::begin_episode(const Environment& /*env*/) {
  pool_ = RequestPool(options_.threshold);
}

int InmaPolicy::decide(const Environment& env, std::mt19937_64& /*rng*/) {
  pool_.update(env.state(), env.instance().sensor_capacity);
  return inma_policy(env, pool_, options_.margin);
}

int DrlPolicy::decide(const Environment& env, std::mt19937_64& rng) {
  const ActionDistribution dist = actor_forward(*actor_, env.observe());
  return greedy_ ? greedy_action(dist) : sample_action(dist, rng);
}

std::unique_ptr<ChargingPolicy> make_policy(const std::string& name,
                                            const BaselineOptions& options,
                                            std::shared_ptr<const ActorParams> actor) {
  if (name == "random") return std::make_unique<RandomPolicy>(options);
  if (name == "njnp") return std::make_unique<NjnpPolicy>(options);
  if (name == "inma") return std::make_unique<InmaPolicy>(options);
  if (name == "drl") {
    if (!actor) throw std::invalid_argument("policy 'drl' needs a checkpoint");
    return std::make_unique<DrlPolicy>(std::move(actor));
  }
  throw std::invalid_argument("unknown policy '" + name + "'");
}

}  // namespace wrsn
