#include "wrsn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace wrsn {

bool adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                 AdamState& state, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam: parameter, gradient and moment sizes differ");
  }
  if (!grads.allFinite()) return false;
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.eps);
  return true;
}

}  // namespace wrsn
