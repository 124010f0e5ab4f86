#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "wrsn/policy_net.hpp"
#include "wrsn/sim.hpp"

namespace wrsn {

/// Returned by a policy that wants to stay put for one simulator substep.
inline constexpr int kIdle = -1;

/// Common interface for learned and heuristic charging policies.
class ChargingPolicy {
 public:
  virtual ~ChargingPolicy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const Environment& /*env*/) {}
  /// Next destination in [0, n] (0 = depot), or kIdle.
  virtual int decide(const Environment& env, std::mt19937_64& rng) = 0;
};

enum class RandomGuard {
  kReturnTrip,  // depot when energy < cost of the trip home + margin
  kService,     // depot when the drawn service + trip home + margin is unaffordable
};

std::string to_string(RandomGuard guard);
RandomGuard random_guard_from_string(const std::string& name);

struct BaselineOptions {
  double threshold = 0.4;  // request when residual < threshold * capacity
  double margin = 5.0;     // J kept in reserve for the way back to the depot
  RandomGuard random_guard = RandomGuard::kReturnTrip;
};

struct ChargeRequest {
  int sensor = 0;     // 0-based sensor index
  double time = 0.0;  // simulation time the request was issued
};

/// On-demand request pool. A sensor is listed at most once and leaves the pool
/// once a full charge has completed after its request.
class RequestPool {
 public:
  explicit RequestPool(double threshold = 0.4) : threshold_(threshold) {}

  void update(const SimState& state, double sensor_capacity);

  const std::vector<ChargeRequest>& requests() const { return requests_; }
  bool empty() const { return requests_.empty(); }
  bool contains(int sensor) const;
  double threshold() const { return threshold_; }

 private:
  double threshold_;
  std::vector<ChargeRequest> requests_;
};

RequestPool update_request_pool(RequestPool pool, const SimState& state,
                                double sensor_capacity);

/// Predicted cost of serving one sensor from the charger's current spot.
struct ServicePlan {
  double travel_time = 0.0;
  double charge_time = 0.0;
  double energy = 0.0;          // MC energy for travel + transfer
  double return_energy = 0.0;   // from the sensor back to the depot

  double finish_time() const { return travel_time + charge_time; }
};

ServicePlan plan_service(const Environment& env, int sensor);

/// True when the charger cannot afford `plan` plus the trip home and margin.
bool needs_depot(const Environment& env, const ServicePlan& plan, double margin);

/// Nearest requesting sensor; kIdle on an empty pool; 0 when the charger
/// could not get home after serving it.
int njnp_policy(const Environment& env, const RequestPool& pool, double margin);

/// Among requesting candidates, minimise the number of other requesters that
/// would run dry before the candidate's service finishes, then the finish
/// time itself. Same idle and depot rules as NJNP.
int inma_policy(const Environment& env, const RequestPool& pool, double margin);

/// Uniform over sensors, replaced by the depot according to `guard`.
int random_policy(const Environment& env, std::mt19937_64& rng, double margin,
                  RandomGuard guard = RandomGuard::kReturnTrip);

class RandomPolicy : public ChargingPolicy {
 public:
  explicit RandomPolicy(BaselineOptions options = {}) : options_(options) {}
  std::string name() const override { return "random"; }
  int decide(const Environment& env, std::mt19937_64& rng) override;

 private:
  BaselineOptions options_;
};

class NjnpPolicy : public ChargingPolicy {
 public:
  explicit NjnpPolicy(BaselineOptions options = {})
      : options_(options), pool_(options.threshold) {}
  std::string name() const override { return "njnp"; }
  void begin_episode(const Environment& env) override;
  int decide(const Environment& env, std::mt19937_64& rng) override;
  const RequestPool& pool() const { return pool_; }

 private:
  BaselineOptions options_;
  RequestPool pool_;
};

class InmaPolicy : public ChargingPolicy {
 public:
  explicit InmaPolicy(BaselineOptions options = {})
      : options_(options), pool_(options.threshold) {}
  std::string name() const override { return "inma"; }
  void begin_episode(const Environment& env) override;
  int decide(const Environment& env, std::mt19937_64& rng) override;

 private:
  BaselineOptions options_;
  RequestPool pool_;
};

/// Actor network wrapped as a policy. Greedy decoding by default.
class DrlPolicy : public ChargingPolicy {
 public:
  explicit DrlPolicy(std::shared_ptr<const ActorParams> actor, bool greedy = true)
      : actor_(std::move(actor)), greedy_(greedy) {}
  std::string name() const override { return "drl"; }
  int decide(const Environment& env, std::mt19937_64& rng) override;

 private:
  std::shared_ptr<const ActorParams> actor_;
  bool greedy_;
};

/// "random", "njnp", "inma" or "drl" (the latter requires `actor`).
std::unique_ptr<ChargingPolicy> make_policy(const std::string& name,
                                            const BaselineOptions& options,
                                            std::shared_ptr<const ActorParams> actor = nullptr);

}  // namespace wrsn
