#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wrsn/sim.hpp"

namespace wrsn {

/// Thrown when a forward or backward pass produces NaN or infinity.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Flat parameter vector with named, column-major matrix blocks laid out in a
/// fixed order. The order is part of the checkpoint format.
class ParamSet {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }

  MatrixMap block(int index);
  ConstMatrixMap block(int index) const;

  void set_zero() { values_.setZero(); }
  bool all_finite() const { return values_.allFinite(); }
  bool same_layout(const ParamSet& other) const;

 protected:
  void add_block(std::string name, int rows, int cols);
  void allocate() { values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total_)); }

 private:
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
  Eigen::VectorXd values_;
};

struct ActorShape {
  int latent = 64;     // d: embedding width
  int attention = 64;  // d': attention score width
  int hidden = 64;     // hidden width of the query MLP

  friend bool operator==(const ActorShape&, const ActorShape&) = default;
};

/// Embeddings (affine + tanh) for charger, depot and sensors, the additive
/// attention (W_A, z_A), the one-hidden-layer query MLP (W_B) and the pointer
/// vector z_C.
class ActorParams : public ParamSet {
 public:
  enum Block {
    kEmbMcW, kEmbMcB,
    kEmbDepotW, kEmbDepotB,
    kEmbSensorW, kEmbSensorB,
    kAttnW, kAttnZ,
    kMlpW1, kMlpB1, kMlpW2, kMlpB2,
    kPointerZ,
    kNumBlocks
  };

  explicit ActorParams(ActorShape shape = {});
  const ActorShape& shape() const { return shape_; }

  static std::size_t parameter_count(const ActorShape& shape);

 private:
  ActorShape shape_;
};

struct CriticShape {
  int hidden = 64;

  friend bool operator==(const CriticShape&, const CriticShape&) = default;
};

/// Three affine layers with ReLU in between. Input is the charger and depot
/// features concatenated with the mean sensor feature vector.
class CriticParams : public ParamSet {
 public:
  enum Block { kW1, kB1, kW2, kB2, kW3, kB3, kNumBlocks };
  static constexpr int kInputs = Observation::kMcFeatures +
                                 Observation::kDepotFeatures +
                                 Observation::kSensorFeatures;

  explicit CriticParams(CriticShape shape = {});
  const CriticShape& shape() const { return shape_; }

 private:
  CriticShape shape_;
};

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
std::pair<ActorParams, CriticParams> init_params(const ActorShape& actor_shape,
                                                 const CriticShape& critic_shape,
                                                 std::uint64_t seed);
std::pair<ActorParams, CriticParams> init_params(int latent, std::uint64_t seed);

/// Softmax over the n + 1 destinations; index 0 is the depot.
struct ActionDistribution {
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;

  int size() const { return static_cast<int>(probs.size()); }
  double log_prob(int action) const;
};

ActionDistribution actor_forward(const ActorParams& params, const Observation& obs);
double critic_forward(const CriticParams& params, const Observation& obs);

int sample_action(const ActionDistribution& dist, std::mt19937_64& rng);
/// Argmax, smallest index on ties.
int greedy_action(const ActionDistribution& dist);
double entropy(const ActionDistribution& dist);

/// Accumulates into `grad` the gradient of
///   -log pi(action | obs) * actor_weight - entropy_coeff * H(pi(. | obs))
/// and returns that loss value.
double actor_backward(const ActorParams& params, const Observation& obs, int action,
                      double actor_weight, double entropy_coeff, ActorParams& grad);

/// Accumulates into `grad` the gradient of 0.5 * (target - V(obs))^2 and
/// returns that loss value.
double critic_backward(const CriticParams& params, const Observation& obs,
                       double target, CriticParams& grad);

struct Gradients {
  ActorParams actor;
  CriticParams critic;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

Gradients backward(const ActorParams& params, const CriticParams& vparams,
                   const Observation& obs, int action, double actor_weight,
                   double entropy_coeff, double value_target);

}  // namespace wrsn
