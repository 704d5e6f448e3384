#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rlsmc/config.hpp"
#include "rlsmc/ddpg.hpp"
#include "rlsmc/net.hpp"
#include "rlsmc/numerics.hpp"
#include "rlsmc/plant.hpp"
#include "rlsmc/reference.hpp"
#include "rlsmc/smc.hpp"
#include "rlsmc/smc_oracle.hpp"
#include "rlsmc/uncertainty.hpp"

namespace rlsmc {

/// r = -sum_i q_i e_i^2 - q_u u1^2.
inline double reward(const StateVector& e, double u1, const std::vector<double>& q,
                     double q_u) {
  if (static_cast<Eigen::Index>(q.size()) != e.size())
    throw ConfigError("reward weight count must match the error dimension");
  double r = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) r -= q[static_cast<std::size_t>(i)] * e[i] * e[i];
  return r - q_u * u1 * u1;
}

/// One control step of a sampled-data episode: quantities at decision time
/// t, the action taken, and the reward observed after the step.
struct StepRecord {
  int step = 0;
  double t = 0.0;
  StateVector x;      // state of the simulated (original) loop
  StateVector x_hat;  // side-by-side simplified loop
  double ref = 0.0;   // y(t)
  StateVector e;      // tracking error at decision time
  double sigma = 0.0; // sliding value of e
  double u_hat = 0.0;
  double u1 = 0.0;
  double u = 0.0;
  double reward = 0.0;
  double v = 0.0;     // 1/2 sigma_err^2 of the x - x_hat surface
};

struct EpisodeLog {
  std::vector<StepRecord> steps;
  double g0 = 0.0;
  std::string termination_reason = "horizon";
};

/// Discounted return from step 0.
inline double return_of(const EpisodeLog& log, double gamma) {
  double g = 0.0;
  double factor = 1.0;
  for (const StepRecord& s : log.steps) {
    g += factor * s.reward;
    factor *= gamma;
  }
  return g;
}

/// Static description of one episode's environment.
struct EpisodeEnv {
  const Plant& plant;
  const ReferenceSignal& ref;
  const SurfaceSpec& surface;
  const Hyperparameters& hyper;
  TerminationMode termination = TerminationMode::StepReward;
  StateVector init;
  StateVector init_hat;
};

inline EpisodeEnv make_env(const ExperimentConfig& config, const Plant& plant,
                           const ReferenceSignal& ref) {
  EpisodeEnv env{plant, ref, config.surface, config.hyper, config.termination,
                 Eigen::Map<const StateVector>(config.init.data(),
                                               static_cast<Eigen::Index>(config.init.size())),
                 Eigen::Map<const StateVector>(config.init_hat.data(),
                                               static_cast<Eigen::Index>(config.init_hat.size()))};
  return env;
}

/// Produces the compensation u1 at a decision point. Receives everything a
/// privileged policy could need; ordinary policies use only (e, sigma).
using CompensationPolicy = std::function<double(
    double t, const StateVector& x, const StateVector& x_hat, const StateVector& e,
    double sigma)>;

namespace detail {

using TransitionSink = std::function<void(const Transition&)>;

/// The sampled-data closed loop of the combined system: at each control
/// step the nominal law is evaluated at the original state, the policy adds
/// u1, and both loops advance under zero-order hold. The simplified twin
/// runs under its own nominal law throughout.
inline EpisodeLog run_loop(const EpisodeEnv& env, const CompensationPolicy& policy,
                           const TransitionSink& sink, double gamma) {
  const Hyperparameters& h = env.hyper;
  EpisodeLog log;
  log.steps.reserve(static_cast<std::size_t>(h.steps));

  StateVector x = env.init;
  StateVector x_hat = env.init_hat;
  double cumulative = 0.0;
  double factor = 1.0;

  for (int k = 0; k < h.steps; ++k) {
    const double t = k * h.t_s;
    const StateVector e = tracking_state(x, env.ref, t);
    const double sigma = sliding_value(env.surface, e);
    const double u_hat = nominal_control(env.surface, env.plant.nominal(), env.ref, t, x);
    const double u1 = policy(t, x, x_hat, e, sigma);
    const double u = combined_control(u_hat, u1);

    const StateVector x_next = integrate_sample(
        [&](double tt, const StateVector& xx) {
          return env.plant.original_derivative(tt, xx, u);
        },
        t, x, h.t_s, h.substeps);

    const double u_hat_twin =
        nominal_control(env.surface, env.plant.nominal(), env.ref, t, x_hat);
    const StateVector x_hat_next = integrate_sample(
        [&](double tt, const StateVector& xx) {
          return env.plant.simplified_derivative(tt, xx, u_hat_twin);
        },
        t, x_hat, h.t_s, h.substeps);

    const StateVector e_next = tracking_state(x_next, env.ref, t + h.t_s);
    const double sigma_next = sliding_value(env.surface, e_next);
    const double r = reward(e_next, u1, h.q, h.q_u);

    cumulative += factor * r;
    factor *= gamma;
    const bool bound_hit = env.termination == TerminationMode::StepReward
                               ? r < h.reward_bound
                               : cumulative < h.reward_bound;

    StepRecord rec{k, t, x, x_hat, env.ref.value(t), e, sigma, u_hat, u1, u, r, 0.0};
    rec.v = 0.5 * std::pow(sliding_value(env.surface, StateVector(x - x_hat)), 2);
    log.steps.push_back(std::move(rec));

    if (sink) sink({e, sigma, u1, r, e_next, sigma_next, bound_hit});

    x = x_next;
    x_hat = x_hat_next;
    if (bound_hit) {
      log.termination_reason = "bound";
      break;
    }
  }
  log.g0 = cumulative;
  return log;
}

}  // namespace detail

/// Noise-free episode under an arbitrary compensation policy.
inline EpisodeLog run_policy_episode(const EpisodeEnv& env,
                                     const CompensationPolicy& policy, double gamma) {
  return detail::run_loop(env, policy, nullptr, gamma);
}

inline CompensationPolicy zero_policy() {
  return [](double, const StateVector&, const StateVector&, const StateVector&,
            double) { return 0.0; };
}

inline CompensationPolicy agent_policy(const Agent& agent) {
  return [&agent](double, const StateVector&, const StateVector&, const StateVector& e,
                  double sigma) {
    return actor_forward(agent.actor, agent.actor_spec, e, sigma).u1;
  };
}

/// Privileged policy evaluating the exact compensation; the switching term
/// uses the x - x_hat sliding value that the compensation is designed for.
inline CompensationPolicy oracle_policy(const Plant& plant,
                                        const UncertaintyOracle& oracle,
                                        const SurfaceSpec& surface,
                                        const ReferenceSignal& ref) {
  return [&](double t, const StateVector& x, const StateVector& x_hat,
             const StateVector&, double) {
    const Compensation c = ideal_compensation(surface, plant, oracle, ref, t, x, x_hat);
    const double sigma_err = sliding_value(surface, StateVector(x - x_hat));
    return compensation_from_head(c.r, c.mu, sigma_err);
  };
}

enum class EpisodeMode { Train, Eval };

/// Sampled-data episode with the agent in the loop. Train mode adds OU
/// exploration noise to u1, stores transitions, and runs one training step
/// per environment step once the buffer can fill a batch.
inline EpisodeLog run_episode(const EpisodeEnv& env, Agent& agent, EpisodeMode mode,
                              const TrainHyper& hyper, std::mt19937_64& rng,
                              ReplayBuffer* buffer = nullptr, OUNoise* noise = nullptr) {
  if (mode == EpisodeMode::Eval)
    return run_policy_episode(env, agent_policy(agent), hyper.gamma);

  if (!buffer || !noise)
    throw ConfigError("training episodes need a replay buffer and a noise state");

  CompensationPolicy policy = [&](double, const StateVector&, const StateVector&,
                                  const StateVector& e, double sigma) {
    return actor_forward(agent.actor, agent.actor_spec, e, sigma).u1 +
           noise->step(rng);
  };
  detail::TransitionSink sink = [&](const Transition& tr) {
    buffer->push(tr);
    if (buffer->size() >= static_cast<std::size_t>(env.hyper.batch)) {
      const auto batch =
          buffer->sample(static_cast<std::size_t>(env.hyper.batch), rng);
      train_step(agent, batch, hyper);
    }
  };
  return detail::run_loop(env, policy, sink, hyper.gamma);
}

struct CurveRow {
  int episode = 0;
  double g0 = 0.0;
  int steps = 0;
  std::string termination_reason;
};

struct TrainResult {
  Agent agent;
  std::vector<CurveRow> curve;
};

/// Full training procedure: seeded initialization, one episode per
/// iteration reset to the configured initial state, per-episode learning
/// curve. The optional sink observes the agent after each episode (for
/// checkpoint cadence).
inline TrainResult train(
    const ExperimentConfig& config,
    const std::function<void(int episode, const Agent&)>& sink = nullptr) {
  config.validate();
  const Plant plant = make_plant(config);
  const ReferenceSignal ref = make_reference(config);
  const EpisodeEnv env = make_env(config, plant, ref);

  Agent agent = make_agent(make_actor_spec(config), make_critic_spec(config),
                           config.seed);
  ReplayBuffer buffer(config.replay_capacity);
  // Decorrelate run randomness from the parameter-init streams.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  OUNoise noise{config.noise.theta, config.noise.sigma, config.hyper.t_s, 0.0};
  noise.validate();
  const TrainHyper hyper{config.hyper.alpha_a, config.hyper.alpha_c,
                         config.hyper.gamma,   config.hyper.tau,
                         config.mask_terminal, config.use_adam};

  TrainResult result{std::move(agent), {}};
  result.curve.reserve(static_cast<std::size_t>(config.hyper.episodes));
  for (int ep = 0; ep < config.hyper.episodes; ++ep) {
    noise.reset();
    const EpisodeLog log = run_episode(env, result.agent, EpisodeMode::Train, hyper,
                                       rng, &buffer, &noise);
    result.curve.push_back({ep, log.g0, static_cast<int>(log.steps.size()),
                            log.termination_reason});
    if (sink) sink(ep, result.agent);
  }
  return result;
}

/// One noise-free episode from the given initial state (both loops start
/// there) under an arbitrary policy.
inline EpisodeLog evaluate_policy(const CompensationPolicy& policy,
                                  const StateVector& init,
                                  const ExperimentConfig& config) {
  config.validate();
  if (init.size() != config.surface.order())
    throw ConfigError("initial state dimension must match the surface order");
  const Plant plant = make_plant(config);
  const ReferenceSignal ref = make_reference(config);
  EpisodeEnv env{plant,  ref,  config.surface, config.hyper,
                 config.termination, init, init};
  return run_policy_episode(env, policy, config.hyper.gamma);
}

/// One noise-free episode from the given initial state; the learned
/// parameters are left untouched.
inline EpisodeLog evaluate(const Agent& agent, const StateVector& init,
                           const ExperimentConfig& config) {
  return evaluate_policy(agent_policy(agent), init, config);
}

// ---------------------------------------------------------------------------
// Analytic-controller simulation with continuous feedback: the control law
// is evaluated inside the derivative field at every integrator stage, so
// the switching term is not held over the sample interval. This realizes
// the continuous-time closed loop the sliding analysis is stated for;
// records are written every substep.
// ---------------------------------------------------------------------------

enum class SimController { Nominal, IdealOracle, Zero };

struct TrajectoryLog {
  std::vector<StepRecord> steps;
};

inline TrajectoryLog simulate(const ExperimentConfig& config, SimController mode) {
  config.validate();
  const Plant plant = make_plant(config);
  const ReferenceSignal ref = make_reference(config);
  const UncertaintyOracle oracle(plant);
  const SurfaceSpec& surface = config.surface;
  const Hyperparameters& h = config.hyper;
  const int n = surface.order();

  const StateVector init = Eigen::Map<const StateVector>(
      config.init.data(), static_cast<Eigen::Index>(config.init.size()));
  const StateVector init_hat = Eigen::Map<const StateVector>(
      config.init_hat.data(), static_cast<Eigen::Index>(config.init_hat.size()));

  const double dt = h.t_s / h.substeps;
  const int total = h.steps * h.substeps;

  // State layout: Nominal and Zero integrate one loop; IdealOracle stacks
  // the original system on top of its simplified twin, which the
  // compensation needs at every stage.
  StateVector z;
  if (mode == SimController::IdealOracle) {
    z.resize(2 * n);
    z.head(n) = init;
    z.tail(n) = init_hat;
  } else {
    z = init;
  }

  auto field = [&](double t, const StateVector& state) -> StateVector {
    switch (mode) {
      case SimController::Nominal: {
        const double u = nominal_control(surface, plant.nominal(), ref, t, state);
        return plant.simplified_derivative(t, state, u);
      }
      case SimController::Zero: {
        const double u = nominal_control(surface, plant.nominal(), ref, t, state);
        return plant.original_derivative(t, state, u);
      }
      case SimController::IdealOracle: {
        const StateVector x = state.head(n);
        const StateVector x_hat = state.tail(n);
        const double u_hat = nominal_control(surface, plant.nominal(), ref, t, x);
        const Compensation c =
            ideal_compensation(surface, plant, oracle, ref, t, x, x_hat);
        const double sigma_err = sliding_value(surface, StateVector(x - x_hat));
        const double u = combined_control(
            u_hat, compensation_from_head(c.r, c.mu, sigma_err));
        const double u_hat_twin =
            nominal_control(surface, plant.nominal(), ref, t, x_hat);
        StateVector dz(2 * n);
        dz.head(n) = plant.original_derivative(t, x, u);
        dz.tail(n) = plant.simplified_derivative(t, x_hat, u_hat_twin);
        return dz;
      }
    }
    return state;
  };

  auto record = [&](int j, double t, const StateVector& state) {
    StepRecord rec;
    rec.step = j;
    rec.t = t;
    rec.x = mode == SimController::IdealOracle ? StateVector(state.head(n)) : state;
    rec.x_hat = mode == SimController::IdealOracle ? StateVector(state.tail(n))
                                                   : rec.x;
    rec.ref = ref.value(t);
    rec.e = tracking_state(rec.x, ref, t);
    rec.sigma = sliding_value(surface, rec.e);
    rec.u_hat = nominal_control(surface, plant.nominal(), ref, t, rec.x);
    if (mode == SimController::IdealOracle) {
      const Compensation c =
          ideal_compensation(surface, plant, oracle, ref, t, rec.x, rec.x_hat);
      const double sigma_err =
          sliding_value(surface, StateVector(rec.x - rec.x_hat));
      rec.u1 = compensation_from_head(c.r, c.mu, sigma_err);
      rec.v = 0.5 * sigma_err * sigma_err;
    }
    rec.u = combined_control(rec.u_hat, rec.u1);
    rec.reward = reward(rec.e, rec.u1, h.q, h.q_u);
    return rec;
  };

  TrajectoryLog log;
  log.steps.reserve(static_cast<std::size_t>(total) + 1);
  for (int j = 0; j < total; ++j) {
    const double t = j * dt;
    log.steps.push_back(record(j, t, z));
    z = rk4_step(field, t, z, dt);
  }
  log.steps.push_back(record(total, total * dt, z));
  return log;
}

// ---------------------------------------------------------------------------
// CSV emission.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_step_rows(std::ostream& out, const std::vector<StepRecord>& steps,
                            bool with_v) {
  out << "step,t,x1,x2,ref,e1,e2,sigma,u_hat,u1,u,reward";
  if (with_v) out << ",v";
  out << "\n";
  for (const StepRecord& s : steps) {
    out << s.step << "," << format_double(s.t) << "," << format_double(s.x[0]) << ","
        << format_double(s.x[1]) << "," << format_double(s.ref) << ","
        << format_double(s.e[0]) << "," << format_double(s.e[1]) << ","
        << format_double(s.sigma) << "," << format_double(s.u_hat) << ","
        << format_double(s.u1) << "," << format_double(s.u) << ","
        << format_double(s.reward);
    if (with_v) out << "," << format_double(s.v);
    out << "\n";
  }
}

}  // namespace detail

inline void write_episode_csv(const EpisodeLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  detail::write_step_rows(out, log.steps, false);
}

inline void write_trajectory_csv(const TrajectoryLog& log, const std::string& path,
                                 bool with_v) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  detail::write_step_rows(out, log.steps, with_v);
}

inline void write_learning_curve_csv(const std::vector<CurveRow>& curve,
                                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "episode,G0,steps,termination_reason\n";
  for (const CurveRow& row : curve)
    out << row.episode << "," << detail::format_double(row.g0) << "," << row.steps
        << "," << row.termination_reason << "\n";
}

}  // namespace rlsmc
