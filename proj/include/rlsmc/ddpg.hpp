#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "rlsmc/errors.hpp"
#include "rlsmc/net.hpp"

namespace rlsmc {

/// One environment step as stored for replay. sigma accompanies the error
/// state because the actor head consumes it.
struct Transition {
  StateVector e;
  double sigma = 0.0;
  double u1 = 0.0;
  double reward = 0.0;
  StateVector e_next;
  double sigma_next = 0.0;
  bool terminated = false;
};

/// Bounded FIFO store; insertion beyond capacity evicts the oldest record.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
  }

  void push(Transition t) {
    if (!t.e.allFinite() || !t.e_next.allFinite() || !std::isfinite(t.sigma) ||
        !std::isfinite(t.sigma_next) || !std::isfinite(t.u1) ||
        !std::isfinite(t.reward))
      throw NumericError("non-finite transition pushed to replay buffer");
    if (store_.size() == capacity_) store_.pop_front();
    store_.push_back(std::move(t));
  }

  std::size_t size() const noexcept { return store_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

  /// Oldest-first indexing.
  const Transition& at(std::size_t i) const { return store_.at(i); }

  /// Uniform sample: with replacement while size < count, without once the
  /// buffer can cover the batch. Deterministic given the rng state.
  std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const {
    if (store_.empty()) throw EmptyBufferError();
    std::vector<Transition> batch;
    batch.reserve(count);
    if (store_.size() < count) {
      std::uniform_int_distribution<std::size_t> dist(0, store_.size() - 1);
      for (std::size_t i = 0; i < count; ++i) batch.push_back(store_[dist(rng)]);
    } else {
      // Partial Fisher-Yates over indices; platform-independent given the rng.
      std::vector<std::size_t> idx(store_.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> dist(i, idx.size() - 1);
        std::swap(idx[i], idx[dist(rng)]);
        batch.push_back(store_[idx[i]]);
      }
    }
    return batch;
  }

private:
  std::deque<Transition> store_;
  std::size_t capacity_;
};

/// Mean-reverting exploration noise around 0:
/// x <- x + theta (0 - x) dt + sigma sqrt(dt) z, z ~ N(0, 1).
struct OUNoise {
  double theta = 0.15;
  double sigma = 0.1;
  double dt = 0.1;
  double x = 0.0;

  void validate() const {
    if (theta < 0.0 || sigma < 0.0 || dt <= 0.0)
      throw ConfigError("OU noise requires theta >= 0, sigma >= 0, dt > 0");
  }

  double step(std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    x += theta * (0.0 - x) * dt + sigma * std::sqrt(dt) * z(rng);
    return x;
  }

  void reset() noexcept { x = 0.0; }
};

struct CriticAdamState {
  AdamState state_branch;
  AdamState action_branch;
  AdamState trunk;
};

/// Actor/critic parameter sets with their lagging targets. Optimizer
/// moments appear only when the adaptive-moment update is switched on.
struct Agent {
  ActorSpec actor_spec;
  CriticSpec critic_spec;
  NetParams actor;
  NetParams actor_target;
  CriticParams critic;
  CriticParams critic_target;
  std::optional<AdamState> actor_adam;
  std::optional<CriticAdamState> critic_adam;
};

/// Seeded initialization; targets start as exact copies of the sources.
inline Agent make_agent(const ActorSpec& actor_spec, const CriticSpec& critic_spec,
                        std::uint64_t seed) {
  Agent agent;
  agent.actor_spec = actor_spec;
  agent.critic_spec = critic_spec;
  agent.actor = init_actor(actor_spec, seed);
  agent.actor_target = agent.actor;
  agent.critic = init_critic(critic_spec, seed + 1);
  agent.critic_target = agent.critic;
  return agent;
}

/// Learning-rate and target-update hyperparameters for one training step.
struct TrainHyper {
  double alpha_a = 1e-4;
  double alpha_c = 5e-3;
  double gamma = 1.0;
  double tau = 5e-3;
  bool mask_terminal = false;
  bool use_adam = false;
};

namespace detail {

struct BatchViews {
  Eigen::MatrixXd E;
  Eigen::MatrixXd U1;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd E_next;
  Eigen::VectorXd sigma_next;
  Eigen::VectorXd sigmas;
  std::vector<bool> terminated;
};

inline BatchViews pack(const std::vector<Transition>& batch) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index n = batch.front().e.size();
  BatchViews v{Eigen::MatrixXd(n, b), Eigen::MatrixXd(1, b), Eigen::VectorXd(b),
               Eigen::MatrixXd(n, b), Eigen::VectorXd(b),   Eigen::VectorXd(b),
               std::vector<bool>(batch.size())};
  for (Eigen::Index j = 0; j < b; ++j) {
    const Transition& t = batch[static_cast<std::size_t>(j)];
    v.E.col(j) = t.e;
    v.U1(0, j) = t.u1;
    v.rewards[j] = t.reward;
    v.E_next.col(j) = t.e_next;
    v.sigma_next[j] = t.sigma_next;
    v.sigmas[j] = t.sigma;
    v.terminated[static_cast<std::size_t>(j)] = t.terminated;
  }
  return v;
}

}  // namespace detail

/// y_j = r_j + gamma Q_target(e'_j, u1_target(e'_j, sigma'_j)). Bootstraps on
/// every transition unless mask_terminal is set.
inline Eigen::VectorXd td_targets(const std::vector<Transition>& batch,
                                  const Agent& agent, double gamma,
                                  bool mask_terminal = false) {
  const detail::BatchViews v = detail::pack(batch);
  const Eigen::MatrixXd head =
      actor_forward_batch(agent.actor_target, agent.actor_spec, v.E_next);
  Eigen::MatrixXd u1_next(1, v.E_next.cols());
  for (Eigen::Index j = 0; j < u1_next.cols(); ++j)
    u1_next(0, j) = compensation_from_head(head(0, j), head(1, j), v.sigma_next[j]);
  const Eigen::MatrixXd q_next =
      critic_forward_batch(agent.critic_target, v.E_next, u1_next);

  Eigen::VectorXd y(v.rewards.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const bool masked = mask_terminal && v.terminated[static_cast<std::size_t>(j)];
    y[j] = v.rewards[j] + (masked ? 0.0 : gamma * q_next(0, j));
  }
  return y;
}

struct TrainStepResult {
  double critic_loss = 0.0;
  double mean_q = 0.0;
};

/// One critic descent step, one actor ascent step, one soft update of both
/// targets, in that order.
inline TrainStepResult train_step(Agent& agent, const std::vector<Transition>& batch,
                                  const TrainHyper& hyper) {
  if (batch.empty()) throw ConfigError("train_step requires a nonempty batch");
  const detail::BatchViews v = detail::pack(batch);
  const Eigen::VectorXd y = td_targets(batch, agent, hyper.gamma, hyper.mask_terminal);

  CriticGradients cg = critic_gradients(agent.critic, v.E, v.U1, y);
  if (hyper.use_adam) {
    if (!agent.critic_adam)
      agent.critic_adam = CriticAdamState{make_adam_state(agent.critic.state_branch),
                                          make_adam_state(agent.critic.action_branch),
                                          make_adam_state(agent.critic.trunk)};
    apply_update_adam(agent.critic.state_branch, cg.grads.state_branch,
                      hyper.alpha_c, UpdateDirection::Descent,
                      agent.critic_adam->state_branch);
    apply_update_adam(agent.critic.action_branch, cg.grads.action_branch,
                      hyper.alpha_c, UpdateDirection::Descent,
                      agent.critic_adam->action_branch);
    apply_update_adam(agent.critic.trunk, cg.grads.trunk, hyper.alpha_c,
                      UpdateDirection::Descent, agent.critic_adam->trunk);
  } else {
    apply_update(agent.critic, cg.grads, hyper.alpha_c, UpdateDirection::Descent);
  }

  ActorGradients ag =
      actor_gradients(agent.actor, agent.actor_spec, agent.critic, v.E, v.sigmas);
  if (hyper.use_adam) {
    if (!agent.actor_adam) agent.actor_adam = make_adam_state(agent.actor);
    apply_update_adam(agent.actor, ag.grads, hyper.alpha_a, UpdateDirection::Ascent,
                      *agent.actor_adam);
  } else {
    apply_update(agent.actor, ag.grads, hyper.alpha_a, UpdateDirection::Ascent);
  }

  soft_update(agent.actor_target, agent.actor, hyper.tau);
  soft_update(agent.critic_target, agent.critic, hyper.tau);

  for (const Layer& layer : agent.actor)
    if (!layer.W.allFinite() || !layer.b.allFinite())
      throw NumericError("actor parameters became non-finite");
  for (const NetParams* stack :
       {&agent.critic.state_branch, &agent.critic.action_branch, &agent.critic.trunk})
    for (const Layer& layer : *stack)
      if (!layer.W.allFinite() || !layer.b.allFinite())
        throw NumericError("critic parameters became non-finite");

  return {cg.loss, ag.mean_q};
}

}  // namespace rlsmc
