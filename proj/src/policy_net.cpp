#include "wrsn/policy_net.hpp"

#include <algorithm>
#include <cmath>

namespace wrsn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ParamSet::MatrixMap ParamSet::block(int index) {
  const auto& b = blocks_.at(static_cast<std::size_t>(index));
  return MatrixMap(values_.data() + b.offset, b.rows, b.cols);
}

ParamSet::ConstMatrixMap ParamSet::block(int index) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(index));
  return ConstMatrixMap(values_.data() + b.offset, b.rows, b.cols);
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].rows != other.blocks_[i].rows ||
        blocks_[i].cols != other.blocks_[i].cols) {
      return false;
    }
  }
  return true;
}

void ParamSet::add_block(std::string name, int rows, int cols) {
  ParamBlock b{std::move(name), rows, cols, total_};
  total_ += b.size();
  blocks_.push_back(std::move(b));
}

ActorParams::ActorParams(ActorShape shape) : shape_(shape) {
  if (shape.latent < 1 || shape.attention < 1 || shape.hidden < 1) {
    throw std::invalid_argument("actor widths must be >= 1");
  }
  const int d = shape.latent;
  add_block("emb_mc.w", d, Observation::kMcFeatures);
  add_block("emb_mc.b", d, 1);
  add_block("emb_depot.w", d, Observation::kDepotFeatures);
  add_block("emb_depot.b", d, 1);
  add_block("emb_sensor.w", d, Observation::kSensorFeatures);
  add_block("emb_sensor.b", d, 1);
  add_block("attn.w", shape.attention, 2 * d);
  add_block("attn.z", shape.attention, 1);
  add_block("mlp.w1", shape.hidden, 2 * d);
  add_block("mlp.b1", shape.hidden, 1);
  add_block("mlp.w2", d, shape.hidden);
  add_block("mlp.b2", d, 1);
  add_block("pointer.z", d, 1);
  allocate();
}

std::size_t ActorParams::parameter_count(const ActorShape& s) {
  const std::size_t d = s.latent;
  const std::size_t a = s.attention;
  const std::size_t h = s.hidden;
  return d * (Observation::kMcFeatures + 1) + d * (Observation::kDepotFeatures + 1) +
         d * (Observation::kSensorFeatures + 1) + a * 2 * d + a + h * 2 * d + h +
         d * h + d + d;
}

CriticParams::CriticParams(CriticShape shape) : shape_(shape) {
  if (shape.hidden < 1) throw std::invalid_argument("critic width must be >= 1");
  add_block("w1", shape.hidden, kInputs);
  add_block("b1", shape.hidden, 1);
  add_block("w2", shape.hidden, shape.hidden);
  add_block("b2", shape.hidden, 1);
  add_block("w3", 1, shape.hidden);
  add_block("b3", 1, 1);
  allocate();
}

namespace {

bool is_bias(const ParamBlock& b) {
  const auto dot = b.name.rfind('.');
  const std::string leaf = dot == std::string::npos ? b.name : b.name.substr(dot + 1);
  return leaf[0] == 'b';
}

void glorot_fill(ParamSet& params, std::mt19937_64& rng) {
  for (std::size_t k = 0; k < params.blocks().size(); ++k) {
    const auto& b = params.blocks()[k];
    auto m = params.block(static_cast<int>(k));
    if (is_bias(b)) {
      m.setZero();
      continue;
    }
    const double bound = std::sqrt(6.0 / (b.rows + b.cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    }
  }
}

// tanh through the vectorised exp; agrees with std::tanh to ~3e-16 absolute
// and saturates cleanly since exp overflows to inf.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

VectorXd softmax(const VectorXd& x) {
  const VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

VectorXd log_softmax(const VectorXd& x) {
  const double mx = x.maxCoeff();
  const double lse = mx + std::log((x.array() - mx).exp().sum());
  return x.array() - lse;
}

struct ActorCache {
  VectorXd h_mc;
  MatrixXd dest;     // d x (n+1) destination embeddings, column 0 = depot
  MatrixXd attn;     // tanh attention activations, d' x (n+1)
  VectorXd align;    // attention weights over destinations
  VectorXd mlp_in;   // [context; h_mc]
  VectorXd hidden;   // tanh hidden layer of the query MLP
  MatrixXd pointer;  // tanh(dest + q), d x (n+1)
  ActionDistribution dist;
};

void check_finite(bool ok, const char* what) {
  if (!ok) throw NonFiniteError(std::string("non-finite value in ") + what);
}

void check_observation(const Observation& obs) {
  if (obs.mc.size() != Observation::kMcFeatures ||
      obs.depot.size() != Observation::kDepotFeatures ||
      obs.sensors.rows() != Observation::kSensorFeatures || obs.sensors.cols() < 1) {
    throw std::invalid_argument("malformed observation");
  }
}

void actor_forward_cached(const ActorParams& p, const Observation& obs, ActorCache& c) {
  check_observation(obs);
  const int d = p.shape().latent;
  const Eigen::Index n = obs.sensors.cols();

  c.h_mc = fast_tanh(
      (p.block(ActorParams::kEmbMcW) * obs.mc + p.block(ActorParams::kEmbMcB).col(0)).array());
  c.dest.resize(d, n + 1);
  c.dest.col(0) = fast_tanh((p.block(ActorParams::kEmbDepotW) * obs.depot +
                             p.block(ActorParams::kEmbDepotB).col(0))
                                .array());
  c.dest.rightCols(n) = fast_tanh(((p.block(ActorParams::kEmbSensorW) * obs.sensors).colwise() +
                                   p.block(ActorParams::kEmbSensorB).col(0))
                                      .array());

  const auto attn_w = p.block(ActorParams::kAttnW);
  const VectorXd mc_term = attn_w.rightCols(d) * c.h_mc;
  c.attn = fast_tanh(((attn_w.leftCols(d) * c.dest).colwise() + mc_term).array());
  const VectorXd scores = c.attn.transpose() * p.block(ActorParams::kAttnZ).col(0);
  c.align = softmax(scores);

  c.mlp_in.resize(2 * d);
  c.mlp_in.head(d) = c.dest * c.align;
  c.mlp_in.tail(d) = c.h_mc;
  c.hidden = fast_tanh(
      (p.block(ActorParams::kMlpW1) * c.mlp_in + p.block(ActorParams::kMlpB1).col(0)).array());
  const VectorXd query =
      p.block(ActorParams::kMlpW2) * c.hidden + p.block(ActorParams::kMlpB2).col(0);

  c.pointer = fast_tanh((c.dest.colwise() + query).array());
  c.dist.logits = c.pointer.transpose() * p.block(ActorParams::kPointerZ).col(0);
  check_finite(c.dist.logits.allFinite(), "actor logits");
  c.dist.probs = softmax(c.dist.logits);
}

struct CriticCache {
  VectorXd input;
  VectorXd pre1, act1, pre2, act2;
  double value = 0.0;
};

void critic_forward_cached(const CriticParams& p, const Observation& obs, CriticCache& c) {
  check_observation(obs);
  c.input.resize(CriticParams::kInputs);
  c.input << obs.mc, obs.depot, obs.sensors.rowwise().mean();
  c.pre1 = p.block(CriticParams::kW1) * c.input + p.block(CriticParams::kB1).col(0);
  c.act1 = c.pre1.cwiseMax(0.0);
  c.pre2 = p.block(CriticParams::kW2) * c.act1 + p.block(CriticParams::kB2).col(0);
  c.act2 = c.pre2.cwiseMax(0.0);
  c.value = (p.block(CriticParams::kW3) * c.act2)(0, 0) + p.block(CriticParams::kB3)(0, 0);
  check_finite(std::isfinite(c.value), "critic value");
}

}  // namespace

std::pair<ActorParams, CriticParams> init_params(const ActorShape& actor_shape,
                                                 const CriticShape& critic_shape,
                                                 std::uint64_t seed) {
  ActorParams actor(actor_shape);
  CriticParams critic(critic_shape);
  std::seed_seq actor_seq{seed, std::uint64_t{0}};
  std::seed_seq critic_seq{seed, std::uint64_t{1}};
  std::mt19937_64 actor_rng(actor_seq);
  std::mt19937_64 critic_rng(critic_seq);
  glorot_fill(actor, actor_rng);
  glorot_fill(critic, critic_rng);
  return {std::move(actor), std::move(critic)};
}

std::pair<ActorParams, CriticParams> init_params(int latent, std::uint64_t seed) {
  if (latent < 1) throw std::invalid_argument("latent width must be >= 1");
  return init_params(ActorShape{latent, latent, latent}, CriticShape{latent}, seed);
}

double ActionDistribution::log_prob(int action) const {
  return log_softmax(logits)(action);
}

ActionDistribution actor_forward(const ActorParams& params, const Observation& obs) {
  ActorCache cache;
  actor_forward_cached(params, obs, cache);
  return std::move(cache.dist);
}

double critic_forward(const CriticParams& params, const Observation& obs) {
  CriticCache cache;
  critic_forward_cached(params, obs, cache);
  return cache.value;
}

int sample_action(const ActionDistribution& dist, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  double cum = 0.0;
  int last_positive = 0;
  for (int i = 0; i < dist.size(); ++i) {
    if (dist.probs(i) <= 0.0) continue;
    cum += dist.probs(i);
    last_positive = i;
    if (u < cum) return i;
  }
  return last_positive;
}

int greedy_action(const ActionDistribution& dist) {
  int best = 0;
  for (int i = 1; i < dist.size(); ++i) {
    if (dist.probs(i) > dist.probs(best)) best = i;
  }
  return best;
}

double entropy(const ActionDistribution& dist) {
  double h = 0.0;
  for (int i = 0; i < dist.size(); ++i) {
    const double p = dist.probs(i);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double actor_backward(const ActorParams& p, const Observation& obs, int action,
                      double actor_weight, double entropy_coeff, ActorParams& grad) {
  if (!grad.same_layout(p)) throw std::invalid_argument("gradient layout mismatch");
  ActorCache c;
  actor_forward_cached(p, obs, c);
  const int d = p.shape().latent;
  const Eigen::Index n = obs.sensors.cols();
  if (action < 0 || action > n) throw std::out_of_range("action outside distribution");

  const VectorXd& probs = c.dist.probs;
  const VectorXd logp = log_softmax(c.dist.logits);
  const double h = -(probs.array() * logp.array()).sum();
  const double loss = -actor_weight * logp(action) - entropy_coeff * h;

  // dL/dlogits for the weighted NLL and the entropy bonus.
  VectorXd g = actor_weight * probs;
  g(action) -= actor_weight;
  g.array() += entropy_coeff * probs.array() * (logp.array() + h);

  // Pointer scores.
  const auto zc = p.block(ActorParams::kPointerZ).col(0);
  grad.block(ActorParams::kPointerZ).col(0) += c.pointer * g;
  const MatrixXd d_pointer_pre =
      (zc * g.transpose()).cwiseProduct((1.0 - c.pointer.array().square()).matrix());
  MatrixXd d_dest = d_pointer_pre;
  const VectorXd d_query = d_pointer_pre.rowwise().sum();

  // Query MLP.
  const auto w2 = p.block(ActorParams::kMlpW2);
  grad.block(ActorParams::kMlpW2) += d_query * c.hidden.transpose();
  grad.block(ActorParams::kMlpB2).col(0) += d_query;
  const VectorXd d_hidden_pre =
      (w2.transpose() * d_query).cwiseProduct((1.0 - c.hidden.array().square()).matrix());
  const auto w1 = p.block(ActorParams::kMlpW1);
  grad.block(ActorParams::kMlpW1) += d_hidden_pre * c.mlp_in.transpose();
  grad.block(ActorParams::kMlpB1).col(0) += d_hidden_pre;
  const VectorXd d_mlp_in = w1.transpose() * d_hidden_pre;
  const VectorXd d_context = d_mlp_in.head(d);
  VectorXd d_h_mc = d_mlp_in.tail(d);

  // Context vector and attention softmax.
  d_dest += d_context * c.align.transpose();
  const VectorXd d_align = c.dest.transpose() * d_context;
  const VectorXd d_scores =
      c.align.cwiseProduct((d_align.array() - c.align.dot(d_align)).matrix());

  const auto za = p.block(ActorParams::kAttnZ).col(0);
  grad.block(ActorParams::kAttnZ).col(0) += c.attn * d_scores;
  const MatrixXd d_attn_pre =
      (za * d_scores.transpose()).cwiseProduct((1.0 - c.attn.array().square()).matrix());
  const VectorXd d_attn_pre_sum = d_attn_pre.rowwise().sum();
  const auto attn_w = p.block(ActorParams::kAttnW);
  auto g_attn_w = grad.block(ActorParams::kAttnW);
  g_attn_w.leftCols(d) += d_attn_pre * c.dest.transpose();
  g_attn_w.rightCols(d) += d_attn_pre_sum * c.h_mc.transpose();
  d_dest += attn_w.leftCols(d).transpose() * d_attn_pre;
  d_h_mc += attn_w.rightCols(d).transpose() * d_attn_pre_sum;

  // Embeddings.
  const VectorXd d_mc_pre = d_h_mc.cwiseProduct((1.0 - c.h_mc.array().square()).matrix());
  grad.block(ActorParams::kEmbMcW) += d_mc_pre * obs.mc.transpose();
  grad.block(ActorParams::kEmbMcB).col(0) += d_mc_pre;

  const VectorXd h_d = c.dest.col(0);
  const VectorXd d_depot_pre =
      d_dest.col(0).cwiseProduct((1.0 - h_d.array().square()).matrix());
  grad.block(ActorParams::kEmbDepotW) += d_depot_pre * obs.depot.transpose();
  grad.block(ActorParams::kEmbDepotB).col(0) += d_depot_pre;

  const MatrixXd d_sensor_pre = d_dest.rightCols(n).cwiseProduct(
      (1.0 - c.dest.rightCols(n).array().square()).matrix());
  grad.block(ActorParams::kEmbSensorW) += d_sensor_pre * obs.sensors.transpose();
  grad.block(ActorParams::kEmbSensorB).col(0) += d_sensor_pre.rowwise().sum();

  check_finite(std::isfinite(loss) && grad.all_finite(), "actor gradient");
  return loss;
}

double critic_backward(const CriticParams& p, const Observation& obs, double target,
                       CriticParams& grad) {
  if (!grad.same_layout(p)) throw std::invalid_argument("gradient layout mismatch");
  CriticCache c;
  critic_forward_cached(p, obs, c);
  const double err = c.value - target;
  const double loss = 0.5 * err * err;

  grad.block(CriticParams::kW3) += err * c.act2.transpose();
  grad.block(CriticParams::kB3)(0, 0) += err;
  const VectorXd d_pre2 = (p.block(CriticParams::kW3).transpose() * err)
                              .cwiseProduct((c.pre2.array() > 0.0).cast<double>().matrix());
  grad.block(CriticParams::kW2) += d_pre2 * c.act1.transpose();
  grad.block(CriticParams::kB2).col(0) += d_pre2;
  const VectorXd d_pre1 = (p.block(CriticParams::kW2).transpose() * d_pre2)
                              .cwiseProduct((c.pre1.array() > 0.0).cast<double>().matrix());
  grad.block(CriticParams::kW1) += d_pre1 * c.input.transpose();
  grad.block(CriticParams::kB1).col(0) += d_pre1;

  check_finite(std::isfinite(loss) && grad.all_finite(), "critic gradient");
  return loss;
}

Gradients backward(const ActorParams& params, const CriticParams& vparams,
                   const Observation& obs, int action, double actor_weight,
                   double entropy_coeff, double value_target) {
  Gradients out{ActorParams(params.shape()), CriticParams(vparams.shape())};
  out.actor_loss = actor_backward(params, obs, action, actor_weight, entropy_coeff, out.actor);
  out.critic_loss = critic_backward(vparams, obs, value_target, out.critic);
  return out;
}

}  // namespace wrsn
