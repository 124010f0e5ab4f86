#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace wrsn {

struct AdamState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index size)
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}
};

/// One bias-corrected Adam descent step on `params`. Returns false and leaves
/// both `params` and `state` untouched when `grads` has a NaN or infinity.
bool adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                 AdamState& state, double lr);

}  // namespace wrsn
