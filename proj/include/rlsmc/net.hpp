#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rlsmc/errors.hpp"
#include "rlsmc/smc.hpp"

namespace rlsmc {

enum class Activation { Relu, Tanh, Linear };

struct LayerSpec {
  int width = 1;
  Activation act = Activation::Relu;
};

/// One dense layer: y = act(W x + b). W is (out x in).
struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Activation act = Activation::Linear;
};

/// Ordered layer stack; the unit of initialization, update and checkpointing.
using NetParams = std::vector<Layer>;

inline Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh();
    case Activation::Linear: return z;
  }
  return z;
}

/// Elementwise activation derivative evaluated at the pre-activation.
inline Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>();
    case Activation::Tanh: {
      Eigen::ArrayXXd th = z.array().tanh();
      return 1.0 - th * th;
    }
    case Activation::Linear:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

/// Per-layer records needed to run a backward pass. Columns are samples.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> preacts;
};

inline Eigen::MatrixXd forward(const NetParams& params, Eigen::MatrixXd x,
                               ForwardCache* cache = nullptr) {
  for (const Layer& layer : params) {
    Eigen::MatrixXd z = (layer.W * x).colwise() + layer.b;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preacts.push_back(z);
    }
    x = activate(z, layer.act);
  }
  return x;
}

inline NetParams zeros_like(const NetParams& params) {
  NetParams out;
  out.reserve(params.size());
  for (const Layer& layer : params) {
    out.push_back({Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()),
                   Eigen::VectorXd::Zero(layer.b.size()), layer.act});
  }
  return out;
}

/// Backpropagates d(loss)/d(output) through the stack, accumulating
/// parameter gradients into `grads` and returning d(loss)/d(input).
inline Eigen::MatrixXd backward(const NetParams& params, const ForwardCache& cache,
                                Eigen::MatrixXd d_out, NetParams& grads) {
  for (int i = static_cast<int>(params.size()) - 1; i >= 0; --i) {
    const Eigen::MatrixXd dz =
        d_out.cwiseProduct(activation_grad(cache.preacts[i], params[i].act));
    grads[i].W.noalias() += dz * cache.inputs[i].transpose();
    grads[i].b += dz.rowwise().sum();
    d_out.noalias() = params[i].W.transpose() * dz;
  }
  return d_out;
}

/// Uniform fan-in initialization: W ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
/// b = 0. Deterministic for a given seed.
inline NetParams init_params(int input_width, const std::vector<LayerSpec>& layers,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NetParams params;
  params.reserve(layers.size());
  int fan_in = input_width;
  for (const LayerSpec& spec : layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer;
    layer.W = Eigen::MatrixXd::NullaryExpr(spec.width, fan_in,
                                           [&]() { return dist(rng); });
    layer.b = Eigen::VectorXd::Zero(spec.width);
    layer.act = spec.act;
    params.push_back(std::move(layer));
    fan_in = spec.width;
  }
  return params;
}

enum class UpdateDirection { Descent, Ascent };

/// Plain gradient step; descent for the critic, ascent for the actor.
inline void apply_update(NetParams& params, const NetParams& grads, double lr,
                         UpdateDirection dir) {
  const double step = dir == UpdateDirection::Descent ? -lr : lr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].W += step * grads[i].W;
    params[i].b += step * grads[i].b;
  }
}

/// target <- tau * source + (1 - tau) * target, element-wise.
inline void soft_update(NetParams& target, const NetParams& source, double tau) {
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i].W = tau * source[i].W + (1.0 - tau) * target[i].W;
    target[i].b = tau * source[i].b + (1.0 - tau) * target[i].b;
  }
}

/// First/second-moment accumulators for the adaptive-moment update.
struct AdamState {
  NetParams m;
  NetParams v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam_state(const NetParams& params) {
  return {zeros_like(params), zeros_like(params), 0, 0.9, 0.999, 1e-8};
}

namespace detail {

template <typename Mat>
void adam_entry(Mat& p, const Mat& g, Mat& m, Mat& v, double signed_lr, double b1,
                double b2, double c1, double c2, double eps) {
  m = b1 * m + (1.0 - b1) * g;
  v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
  p.array() += signed_lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

}  // namespace detail

/// Adaptive-moment step with bias correction; sign of the step follows the
/// requested direction, like apply_update.
inline void apply_update_adam(NetParams& params, const NetParams& grads, double lr,
                              UpdateDirection dir, AdamState& state) {
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const double signed_lr = (dir == UpdateDirection::Descent ? -1.0 : 1.0) * lr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    detail::adam_entry(params[i].W, grads[i].W, state.m[i].W, state.v[i].W,
                       signed_lr, state.beta1, state.beta2, c1, c2, state.eps);
    detail::adam_entry(params[i].b, grads[i].b, state.m[i].b, state.v[i].b,
                       signed_lr, state.beta1, state.beta2, c1, c2, state.eps);
  }
}

// ---------------------------------------------------------------------------
// Actor: hidden stack, a two-unit (r, mu) layer, then the fixed head
// u1 = -r - mu sign(sigma) with mu = mu_scale * tanh(pre-activation).
// ---------------------------------------------------------------------------

struct ActorSpec {
  int input_width = 2;
  std::vector<LayerSpec> hidden;
  double mu_scale = 1.0;

  /// Layer specs of the trainable stack (hidden + the two-unit layer; the
  /// tanh on the mu unit and the head are applied outside the stack).
  std::vector<LayerSpec> stack() const {
    std::vector<LayerSpec> out = hidden;
    out.push_back({2, Activation::Linear});
    return out;
  }
};

inline NetParams init_actor(const ActorSpec& spec, std::uint64_t seed) {
  return init_params(spec.input_width, spec.stack(), seed);
}

struct ActorOutput {
  double r = 0.0;
  double mu = 0.0;
  double u1 = 0.0;
};

/// Batched actor evaluation. E has one error-state column per sample.
/// Row 0 of the returned matrix is r, row 1 is mu (after tanh and scale).
inline Eigen::MatrixXd actor_forward_batch(const NetParams& params,
                                           const ActorSpec& spec,
                                           const Eigen::MatrixXd& E,
                                           ForwardCache* cache = nullptr) {
  Eigen::MatrixXd out = forward(params, E, cache);
  out.row(1) = spec.mu_scale * out.row(1).array().tanh();
  return out;
}

inline ActorOutput actor_forward(const NetParams& params, const ActorSpec& spec,
                                 const StateVector& e, double sigma) {
  const Eigen::MatrixXd head = actor_forward_batch(params, spec, e);
  if (!head.allFinite()) throw NumericError("actor produced non-finite output");
  ActorOutput out;
  out.r = head(0, 0);
  out.mu = head(1, 0);
  out.u1 = compensation_from_head(out.r, out.mu, sigma);
  return out;
}

// ---------------------------------------------------------------------------
// Critic: a state branch and an action branch whose outputs are
// concatenated into a trunk ending in one linear unit.
// ---------------------------------------------------------------------------

struct CriticSpec {
  int state_width = 2;
  std::vector<LayerSpec> state_branch;
  std::vector<LayerSpec> action_branch;
  std::vector<LayerSpec> trunk;  // the scalar output layer is appended

  std::vector<LayerSpec> trunk_stack() const {
    std::vector<LayerSpec> out = trunk;
    out.push_back({1, Activation::Linear});
    return out;
  }

  int branch_width(const std::vector<LayerSpec>& branch) const {
    return branch.empty() ? 0 : branch.back().width;
  }
};

struct CriticParams {
  NetParams state_branch;
  NetParams action_branch;
  NetParams trunk;
};

inline CriticParams init_critic(const CriticSpec& spec, std::uint64_t seed) {
  // Distinct sub-seeds per stack so branches are independently initialized.
  CriticParams p;
  p.state_branch = init_params(spec.state_width, spec.state_branch, seed * 3 + 1);
  p.action_branch = init_params(1, spec.action_branch, seed * 3 + 2);
  const int cat = spec.branch_width(spec.state_branch) +
                  spec.branch_width(spec.action_branch);
  p.trunk = init_params(cat, spec.trunk_stack(), seed * 3 + 3);
  return p;
}

inline CriticParams zeros_like(const CriticParams& p) {
  return {zeros_like(p.state_branch), zeros_like(p.action_branch),
          zeros_like(p.trunk)};
}

inline void apply_update(CriticParams& p, const CriticParams& g, double lr,
                         UpdateDirection dir) {
  apply_update(p.state_branch, g.state_branch, lr, dir);
  apply_update(p.action_branch, g.action_branch, lr, dir);
  apply_update(p.trunk, g.trunk, lr, dir);
}

inline void soft_update(CriticParams& target, const CriticParams& source, double tau) {
  soft_update(target.state_branch, source.state_branch, tau);
  soft_update(target.action_branch, source.action_branch, tau);
  soft_update(target.trunk, source.trunk, tau);
}

struct CriticCache {
  ForwardCache state_branch;
  ForwardCache action_branch;
  ForwardCache trunk;
  int state_rows = 0;
};

/// Batched Q evaluation: E is (n x B), U1 is (1 x B); returns (1 x B).
inline Eigen::MatrixXd critic_forward_batch(const CriticParams& params,
                                            const Eigen::MatrixXd& E,
                                            const Eigen::MatrixXd& U1,
                                            CriticCache* cache = nullptr) {
  Eigen::MatrixXd hs = forward(params.state_branch, E,
                               cache ? &cache->state_branch : nullptr);
  Eigen::MatrixXd ha = forward(params.action_branch, U1,
                               cache ? &cache->action_branch : nullptr);
  Eigen::MatrixXd cat(hs.rows() + ha.rows(), hs.cols());
  cat << hs, ha;
  if (cache) cache->state_rows = static_cast<int>(hs.rows());
  return forward(params.trunk, cat, cache ? &cache->trunk : nullptr);
}

inline double critic_forward(const CriticParams& params, const StateVector& e,
                             double u1) {
  Eigen::MatrixXd a(1, 1);
  a(0, 0) = u1;
  const Eigen::MatrixXd q = critic_forward_batch(params, e, a);
  if (!q.allFinite()) throw NumericError("critic produced non-finite output");
  return q(0, 0);
}

/// Backpropagates dq (1 x B) through the critic, accumulating into `grads`
/// and returning d(loss)/d(U1), the slope of the objective in the action.
inline Eigen::MatrixXd critic_backward(const CriticParams& params,
                                       const CriticCache& cache,
                                       const Eigen::MatrixXd& dq,
                                       CriticParams& grads) {
  const Eigen::MatrixXd d_cat = backward(params.trunk, cache.trunk, dq, grads.trunk);
  const Eigen::MatrixXd d_hs = d_cat.topRows(cache.state_rows);
  const Eigen::MatrixXd d_ha = d_cat.bottomRows(d_cat.rows() - cache.state_rows);
  backward(params.state_branch, cache.state_branch, d_hs, grads.state_branch);
  return backward(params.action_branch, cache.action_branch, d_ha,
                  grads.action_branch);
}

/// Mean-squared TD loss over the batch and its exact gradient.
/// E: (n x B), U1: (1 x B), targets y: length B.
struct CriticGradients {
  double loss = 0.0;
  CriticParams grads;
};

inline CriticGradients critic_gradients(const CriticParams& params,
                                        const Eigen::MatrixXd& E,
                                        const Eigen::MatrixXd& U1,
                                        const Eigen::VectorXd& y) {
  const auto batch = static_cast<double>(E.cols());
  CriticCache cache;
  const Eigen::MatrixXd q = critic_forward_batch(params, E, U1, &cache);
  const Eigen::RowVectorXd diff = q.row(0) - y.transpose();

  CriticGradients out;
  out.loss = diff.squaredNorm() / batch;
  out.grads = zeros_like(params);
  const Eigen::MatrixXd dq = (2.0 / batch) * diff;
  critic_backward(params, cache, dq, out.grads);
  return out;
}

/// Gradient of mean Q(e, u1(e)) with respect to the actor parameters,
/// chained through the head: du1/dr = -1, du1/dmu = -sign(sigma), with
/// sign(sigma) held constant. Returns the mean Q alongside.
struct ActorGradients {
  double mean_q = 0.0;
  NetParams grads;
};

inline ActorGradients actor_gradients(const NetParams& actor,
                                      const ActorSpec& spec,
                                      const CriticParams& critic,
                                      const Eigen::MatrixXd& E,
                                      const Eigen::VectorXd& sigmas) {
  const auto batch = static_cast<double>(E.cols());

  ForwardCache actor_cache;
  Eigen::MatrixXd head = forward(actor, E, &actor_cache);
  const Eigen::ArrayXd mu_pre = head.row(1).transpose().array();
  const Eigen::ArrayXd mu = spec.mu_scale * mu_pre.tanh();
  const Eigen::ArrayXd r = head.row(0).transpose().array();

  Eigen::ArrayXd signs(sigmas.size());
  for (Eigen::Index i = 0; i < sigmas.size(); ++i) signs[i] = sign_of(sigmas[i]);

  Eigen::MatrixXd U1(1, E.cols());
  U1.row(0) = (-r - mu * signs).transpose();

  CriticCache critic_cache;
  const Eigen::MatrixXd q = critic_forward_batch(critic, E, U1, &critic_cache);

  // d(mean Q)/dq_j = 1/B; only dQ/dU1 is needed from the critic.
  CriticParams critic_scratch = zeros_like(critic);
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, E.cols(), 1.0 / batch);
  const Eigen::MatrixXd d_u1 =
      critic_backward(critic, critic_cache, dq, critic_scratch);

  // Through the head into the two-unit layer's pre-activations.
  Eigen::MatrixXd d_head(2, E.cols());
  d_head.row(0) = -d_u1.row(0);
  const Eigen::ArrayXd tanh_grad = 1.0 - mu_pre.tanh().square();
  d_head.row(1) = (-d_u1.row(0).transpose().array() * signs * spec.mu_scale *
                   tanh_grad).transpose();

  ActorGradients out;
  out.mean_q = q.row(0).mean();
  out.grads = zeros_like(actor);
  backward(actor, actor_cache, d_head, out.grads);
  return out;
}

// ---------------------------------------------------------------------------
// Named shapes.
// ---------------------------------------------------------------------------

/// Reduced-scale shapes used by the fast experiments and the test suite:
/// the full-size topology at a quarter of the width and one ReLU layer
/// less. The linear mixing layer ahead of the head is load-bearing; plain
/// ReLU stacks plateau well short of these shapes on the tracking task.
inline ActorSpec desk_actor_spec(int n) {
  return {n,
          {{128, Activation::Relu},
           {128, Activation::Relu},
           {64, Activation::Linear}},
          1.0};
}

inline CriticSpec desk_critic_spec(int n) {
  std::vector<LayerSpec> branch{{128, Activation::Relu},
                                {128, Activation::Relu}};
  return {n, branch, branch,
          {{128, Activation::Relu}, {128, Activation::Relu}}};
}

/// Full-size shapes: three 512 ReLU layers and a 64 linear layer ahead of
/// the (r, mu) units; critic branches of three 512 layers with a two-layer
/// 512 trunk after concatenation.
inline ActorSpec paper_actor_spec(int n) {
  return {n,
          {{512, Activation::Relu},
           {512, Activation::Relu},
           {512, Activation::Relu},
           {64, Activation::Linear}},
          1.0};
}

inline CriticSpec paper_critic_spec(int n) {
  std::vector<LayerSpec> branch{
      {512, Activation::Relu}, {512, Activation::Relu}, {512, Activation::Relu}};
  return {n, branch, branch, {{512, Activation::Relu}, {512, Activation::Relu}}};
}

}  // namespace rlsmc
