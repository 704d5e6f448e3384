// Acceptance gate: runs every first-class claim of the project end to end
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rlsmc/harness.hpp"

using rlsmc::StateVector;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients against central finite differences.
// ---------------------------------------------------------------------------

std::vector<double*> param_pointers(rlsmc::NetParams& p) {
  std::vector<double*> out;
  for (rlsmc::Layer& layer : p) {
    for (Eigen::Index i = 0; i < layer.W.size(); ++i)
      out.push_back(layer.W.data() + i);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i)
      out.push_back(layer.b.data() + i);
  }
  return out;
}

std::vector<double*> param_pointers(rlsmc::CriticParams& p) {
  std::vector<double*> out = param_pointers(p.state_branch);
  for (double* q : param_pointers(p.action_branch)) out.push_back(q);
  for (double* q : param_pointers(p.trunk)) out.push_back(q);
  return out;
}

double min_abs_relu_preact(const rlsmc::NetParams& params,
                           const rlsmc::ForwardCache& cache) {
  double best = 1e30;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].act != rlsmc::Activation::Relu) continue;
    best = std::min(best, cache.preacts[i].cwiseAbs().minCoeff());
  }
  return best;
}

std::vector<rlsmc::LayerSpec> random_stack(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_layers(1, 2);
  std::uniform_int_distribution<int> width(1, 8);
  std::uniform_int_distribution<int> act(0, 1);
  std::vector<rlsmc::LayerSpec> out;
  const int n = n_layers(rng);
  for (int i = 0; i < n; ++i)
    out.push_back({width(rng), act(rng) == 0 ? rlsmc::Activation::Relu
                                             : rlsmc::Activation::Tanh});
  return out;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                              Eigen::Index cols, double span) {
  std::uniform_real_distribution<double> dist(-span, span);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&]() { return dist(rng); });
}

double rel_error(double a, double f) {
  return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
}

// Finite differences across a rectifier kink measure a slope average, not
// the analytic gradient; candidates whose pre-activations sit within the
// guard of zero are redrawn. The guard dwarfs the probe size.
constexpr double kKinkGuard = 1e-3;
constexpr double kProbe = 1e-5;
constexpr double kGradTolerance = 1e-4;

double critic_loss(const rlsmc::CriticParams& params, const Eigen::MatrixXd& E,
                   const Eigen::MatrixXd& U1, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd q = rlsmc::critic_forward_batch(params, E, U1);
  return (q.row(0).transpose() - y).squaredNorm() / static_cast<double>(E.cols());
}

double actor_objective(const rlsmc::NetParams& actor, const rlsmc::ActorSpec& spec,
                       const rlsmc::CriticParams& critic, const Eigen::MatrixXd& E,
                       const Eigen::VectorXd& sigmas) {
  const Eigen::MatrixXd head = rlsmc::actor_forward_batch(actor, spec, E);
  Eigen::MatrixXd u1(1, E.cols());
  for (Eigen::Index j = 0; j < E.cols(); ++j)
    u1(0, j) = rlsmc::compensation_from_head(head(0, j), head(1, j), sigmas[j]);
  return rlsmc::critic_forward_batch(critic, E, u1).row(0).mean();
}

double worst_critic_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> batch_dist(1, 8);
  rlsmc::CriticSpec spec;
  rlsmc::CriticParams params;
  Eigen::MatrixXd E, U1;
  Eigen::VectorXd y;
  for (;;) {
    spec = rlsmc::CriticSpec{2, random_stack(rng), random_stack(rng),
                             random_stack(rng)};
    params = rlsmc::init_critic(spec, rng());
    const Eigen::Index batch = batch_dist(rng);
    E = random_matrix(rng, 2, batch, 2.0);
    U1 = random_matrix(rng, 1, batch, 2.0);
    y = random_matrix(rng, batch, 1, 2.0);
    rlsmc::CriticCache cache;
    rlsmc::critic_forward_batch(params, E, U1, &cache);
    const double clearance =
        std::min({min_abs_relu_preact(params.state_branch, cache.state_branch),
                  min_abs_relu_preact(params.action_branch, cache.action_branch),
                  min_abs_relu_preact(params.trunk, cache.trunk)});
    if (clearance > kKinkGuard) break;
  }

  rlsmc::CriticGradients analytic = rlsmc::critic_gradients(params, E, U1, y);
  const std::vector<double*> ps = param_pointers(params);
  const std::vector<double*> gs = param_pointers(analytic.grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double saved = *ps[i];
    *ps[i] = saved + kProbe;
    const double up = critic_loss(params, E, U1, y);
    *ps[i] = saved - kProbe;
    const double down = critic_loss(params, E, U1, y);
    *ps[i] = saved;
    worst = std::max(worst, rel_error(*gs[i], (up - down) / (2.0 * kProbe)));
  }
  return worst;
}

double worst_actor_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> batch_dist(1, 8);
  std::uniform_real_distribution<double> sigma_dist(-2.0, 2.0);
  std::uniform_int_distribution<int> sigma_zero(0, 4);
  rlsmc::ActorSpec actor_spec;
  rlsmc::NetParams actor;
  rlsmc::CriticSpec critic_spec;
  rlsmc::CriticParams critic;
  Eigen::MatrixXd E;
  Eigen::VectorXd sigmas;
  for (;;) {
    actor_spec = rlsmc::ActorSpec{2, random_stack(rng), 1.0};
    actor = rlsmc::init_actor(actor_spec, rng());
    critic_spec = rlsmc::CriticSpec{2, random_stack(rng), random_stack(rng),
                                    random_stack(rng)};
    critic = rlsmc::init_critic(critic_spec, rng());
    const Eigen::Index batch = batch_dist(rng);
    E = random_matrix(rng, 2, batch, 2.0);
    sigmas.resize(batch);
    for (Eigen::Index j = 0; j < batch; ++j)
      sigmas[j] = sigma_zero(rng) == 0 ? 0.0 : sigma_dist(rng);

    rlsmc::ForwardCache actor_cache;
    const Eigen::MatrixXd head =
        rlsmc::actor_forward_batch(actor, actor_spec, E, &actor_cache);
    Eigen::MatrixXd u1(1, batch);
    for (Eigen::Index j = 0; j < batch; ++j)
      u1(0, j) = rlsmc::compensation_from_head(head(0, j), head(1, j), sigmas[j]);
    rlsmc::CriticCache critic_cache;
    rlsmc::critic_forward_batch(critic, E, u1, &critic_cache);
    const double clearance = std::min(
        {min_abs_relu_preact(actor, actor_cache),
         min_abs_relu_preact(critic.state_branch, critic_cache.state_branch),
         min_abs_relu_preact(critic.action_branch, critic_cache.action_branch),
         min_abs_relu_preact(critic.trunk, critic_cache.trunk)});
    if (clearance > kKinkGuard) break;
  }

  rlsmc::ActorGradients analytic =
      rlsmc::actor_gradients(actor, actor_spec, critic, E, sigmas);
  const std::vector<double*> ps = param_pointers(actor);
  std::vector<double*> gs = param_pointers(analytic.grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double saved = *ps[i];
    *ps[i] = saved + kProbe;
    const double up = actor_objective(actor, actor_spec, critic, E, sigmas);
    *ps[i] = saved - kProbe;
    const double down = actor_objective(actor, actor_spec, critic, E, sigmas);
    *ps[i] = saved;
    worst = std::max(worst, rel_error(*gs[i], (up - down) / (2.0 * kProbe)));
  }
  return worst;
}

Criterion criterion_gradients() {
  std::mt19937_64 rng(20240901);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) worst = std::max(worst, worst_critic_case(rng));
  for (int i = 0; i < 25; ++i) worst = std::max(worst, worst_actor_case(rng));
  return {1, "analytic gradients match finite differences", worst < kGradTolerance,
          format("max relative error %.3g over 50 networks (tol 1e-4)", worst)};
}

// ---------------------------------------------------------------------------
// Criterion 2: reaching and tracking of the model-based law on the
// simplified plant.
// ---------------------------------------------------------------------------

Criterion criterion_reaching() {
  const rlsmc::ExperimentConfig config = rlsmc::preset_config("desk-msd");
  const rlsmc::TrajectoryLog log =
      rlsmc::simulate(config, rlsmc::SimController::Nominal);
  double worst_sigma = 0.0, worst_err = 0.0;
  for (const rlsmc::StepRecord& s : log.steps) {
    if (s.t >= 2.0) worst_sigma = std::max(worst_sigma, std::abs(s.sigma));
    if (s.t >= 3.0) worst_err = std::max(worst_err, std::abs(s.x[0] - s.ref));
  }
  const bool pass = worst_sigma < 0.05 && worst_err < 0.05;
  return {2, "model-based law reaches the surface and tracks", pass,
          format("max |sigma| %.4f after 2 s, max |x1-y| %.4f on [3,7] s "
                 "(tol 0.05)",
                 worst_sigma, worst_err)};
}

// ---------------------------------------------------------------------------
// Criterion 3: Lyapunov decrease under the ideal compensation.
// ---------------------------------------------------------------------------

struct LyapunovStats {
  bool pass = true;
  int active = 0;
  double worst_growth = -1e30;
};

LyapunovStats lyapunov_run(const std::vector<double>& init,
                           const std::vector<double>& init_hat) {
  rlsmc::ExperimentConfig config;
  config.init = init;
  config.init_hat = init_hat;
  const rlsmc::TrajectoryLog log =
      rlsmc::simulate(config, rlsmc::SimController::IdealOracle);
  LyapunovStats stats;
  for (std::size_t i = 0; i + 1 < log.steps.size(); ++i) {
    const double sigma_err = std::sqrt(2.0 * log.steps[i].v);
    if (sigma_err <= 0.05) continue;
    stats.active += 1;
    const double growth = log.steps[i + 1].v - log.steps[i].v;
    stats.worst_growth = std::max(stats.worst_growth, growth);
    if (growth > 1e-3) stats.pass = false;
  }
  return stats;
}

Criterion criterion_lyapunov() {
  const LyapunovStats coincident = lyapunov_run({0.0, 0.0}, {0.0, 0.0});
  const LyapunovStats separated = lyapunov_run({2.0, -1.0}, {0.0, 0.0});
  const bool pass = coincident.pass && separated.pass && separated.active > 0;
  return {3, "ideal compensation never grows the Lyapunov function", pass,
          format("worst growth %.3g over %.0f active samples (tol 1e-3)",
                 separated.worst_growth,
                 static_cast<double>(coincident.active + separated.active))};
}

// ---------------------------------------------------------------------------
// Criterion 4: identically null loop without mismatch or compensation.
// ---------------------------------------------------------------------------

Criterion criterion_null() {
  rlsmc::ExperimentConfig config;
  config.plant.m = 1.0;
  config.plant.c = 0.0;
  config.plant.k = 5.0;
  config.plant.b = 0.0;
  config.plant.m_hat = 1.0;
  config.plant.c_hat = 0.0;
  config.plant.k_hat = 5.0;
  config.reference = "zero";
  const rlsmc::EpisodeLog log = rlsmc::evaluate_policy(
      rlsmc::zero_policy(), StateVector::Zero(2), config);
  double worst = 0.0;
  for (const rlsmc::StepRecord& s : log.steps) {
    worst = std::max(worst, s.e.cwiseAbs().maxCoeff());
    worst = std::max(worst, (s.x - s.x_hat).cwiseAbs().maxCoeff());
  }
  const bool pass = worst < 1e-9 && std::abs(log.g0) < 1e-12;
  return {4, "mismatch-free null run stays at zero", pass,
          format("max |e| %.3g (tol 1e-9), |G0| %.3g (tol 1e-12)", worst,
                 std::abs(log.g0))};
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6: desk-scale learning and generalization.
// ---------------------------------------------------------------------------

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool improved = false;
  bool tracks = false;
  double mean_first = 0.0;
  double mean_last = 0.0;
  double worst_e1_origin = 0.0;
  double worst_e1_shifted = 0.0;
  bool generalizes = false;
};

SeedOutcome run_seed(std::uint64_t seed) {
  rlsmc::ExperimentConfig config = rlsmc::preset_config("desk-msd");
  config.seed = seed;
  const rlsmc::TrainResult result = rlsmc::train(config);

  SeedOutcome outcome;
  outcome.seed = seed;
  auto mean_g0 = [&](std::size_t begin, std::size_t count) {
    double sum = 0.0;
    for (std::size_t i = begin; i < begin + count; ++i) sum += result.curve[i].g0;
    return sum / static_cast<double>(count);
  };
  outcome.mean_first = mean_g0(0, 20);
  outcome.mean_last = mean_g0(result.curve.size() - 20, 20);
  // Improvement by at least half the gap to zero.
  outcome.improved = outcome.mean_last >= 0.5 * outcome.mean_first;

  auto worst_late_e1 = [&](double x1, double x2) {
    StateVector init(2);
    init << x1, x2;
    const rlsmc::EpisodeLog log = rlsmc::evaluate(result.agent, init, config);
    // A run that ends on the reward bound never reaches the window; score
    // it as a miss rather than vacuously passing.
    if (log.steps.size() < static_cast<std::size_t>(config.hyper.steps))
      return 99.0;
    double worst = 0.0;
    for (const rlsmc::StepRecord& s : log.steps)
      if (s.t >= 5.0) worst = std::max(worst, std::abs(s.e[0]));
    return worst;
  };
  outcome.worst_e1_origin = worst_late_e1(0.0, 0.0);
  outcome.tracks = outcome.worst_e1_origin < 0.1;
  outcome.worst_e1_shifted = worst_late_e1(2.0, -1.0);
  outcome.generalizes = outcome.worst_e1_shifted < 0.2;
  return outcome;
}

std::vector<SeedOutcome> learning_outcomes() {
  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    outcomes.push_back(run_seed(seed));
    const SeedOutcome& o = outcomes.back();
    std::printf("        seed %llu: mean G0 %.1f -> %.1f, late |e1| %.3f from "
                "origin, %.3f from (2,-1) [%.0f s]\n",
                static_cast<unsigned long long>(o.seed), o.mean_first,
                o.mean_last, o.worst_e1_origin, o.worst_e1_shifted,
                now_seconds());
    std::fflush(stdout);
  }
  return outcomes;
}

Criterion criterion_learning(const std::vector<SeedOutcome>& outcomes) {
  int passed = 0;
  for (const SeedOutcome& o : outcomes)
    if (o.improved && o.tracks) ++passed;
  return {5, "desk-scale training learns the compensation", passed >= 2,
          format("%.0f of 3 seeds improved by half the gap and track within "
                 "0.1 late in the episode",
                 static_cast<double>(passed))};
}

Criterion criterion_generalization(const std::vector<SeedOutcome>& outcomes) {
  int eligible = 0, passed = 0;
  for (const SeedOutcome& o : outcomes) {
    if (!(o.improved && o.tracks)) continue;
    ++eligible;
    if (o.generalizes) ++passed;
  }
  // The check applies to whatever seeds cleared the learning criterion; an
  // empty set is a failure, not a vacuous pass.
  const bool pass = eligible >= 1 && passed == eligible;
  return {6, "trained policies track from the shifted start", pass,
          format("%.0f of %.0f passing seeds stay within 0.2 from (2,-1)",
                 static_cast<double>(passed), static_cast<double>(eligible))};
}

// ---------------------------------------------------------------------------
// Criterion 7: the property suite.
// ---------------------------------------------------------------------------

bool rk4_order_property(std::string& note) {
  auto decay = [](double, const StateVector& x) -> StateVector { return -x; };
  StateVector x0(1);
  x0 << 1.0;
  auto error_at = [&](int substeps) {
    return std::abs(
        rlsmc::integrate_sample(decay, 0.0, x0, 1.0, substeps)[0] -
        std::exp(-1.0));
  };
  const double r12 = error_at(10) / error_at(20);
  const double r23 = error_at(20) / error_at(40);
  note += format("rk4 ratios %.1f/%.1f; ", r12, r23);
  return r12 > 12.0 && r12 < 20.0 && r23 > 12.0 && r23 < 20.0;
}

bool replay_properties(std::string& note) {
  rlsmc::Transition t;
  t.e = StateVector::Zero(2);
  t.e_next = StateVector::Zero(2);

  rlsmc::ReplayBuffer fifo(2);
  for (double tag : {1.0, 2.0, 3.0}) {
    t.reward = tag;
    fifo.push(t);
  }
  if (fifo.size() != 2 || fifo.at(0).reward != 2.0 || fifo.at(1).reward != 3.0)
    return false;

  rlsmc::ReplayBuffer buffer(4);
  for (int i = 0; i < 4; ++i) {
    t.reward = i;
    buffer.push(t);
  }
  std::mt19937_64 rng(555);
  std::array<int, 4> counts{};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    counts[static_cast<std::size_t>(buffer.sample(1, rng)[0].reward)] += 1;
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  int worst_dev = 0;
  for (int count : counts)
    worst_dev = std::max(worst_dev, std::abs(count - draws / 4));
  note += format("fifo ok, replay worst dev %.0f (5 sigma %.0f); ",
                 static_cast<double>(worst_dev), 5.0 * sigma);
  return worst_dev < 5.0 * sigma;
}

bool ou_variance_property(std::string& note) {
  rlsmc::OUNoise noise{0.15, 0.1, 0.1, 0.0};
  std::mt19937_64 rng(77);
  for (int i = 0; i < 10000; ++i) noise.step(rng);
  double sum = 0.0, sum_sq = 0.0;
  const int samples = 1000000;
  for (int i = 0; i < samples; ++i) {
    const double x = noise.step(rng);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / samples;
  const double var = sum_sq / samples - mean * mean;
  const double stationary = 0.1 * 0.1 / (2.0 * 0.15);
  note += format("ou var %.4f vs %.4f; ", var, stationary);
  return std::abs(var - stationary) < 0.10 * stationary;
}

bool contraction_property() {
  rlsmc::Layer layer;
  layer.W = Eigen::MatrixXd::Constant(1, 1, 0.3);
  layer.b = Eigen::VectorXd::Zero(1);
  layer.act = rlsmc::Activation::Linear;
  rlsmc::NetParams target{layer};
  layer.W(0, 0) = 1.7;
  const rlsmc::NetParams source{layer};
  const double tau = 0.005;
  const double gap0 = 1.4;
  for (int k = 1; k <= 20; ++k) {
    rlsmc::soft_update(target, source, tau);
    const double gap = std::abs(target[0].W(0, 0) - source[0].W(0, 0));
    if (std::abs(gap - std::pow(1.0 - tau, k) * gap0) > 1e-9 * gap0)
      return false;
  }
  return true;
}

bool mu_bound_property() {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    rlsmc::ActorSpec spec{2, random_stack(rng), 3.0};
    const rlsmc::NetParams params = rlsmc::init_actor(spec, rng());
    const Eigen::MatrixXd E = random_matrix(rng, 2, 50, 5.0);
    const Eigen::MatrixXd head = rlsmc::actor_forward_batch(params, spec, E);
    if (head.row(1).cwiseAbs().maxCoeff() > 3.0) return false;
  }
  return true;
}

bool reward_return_property() {
  StateVector e(2);
  e << 1.0, -1.0;
  if (rlsmc::reward(e, 0.0, {1.0, 1.0}, 0.0) != -2.0) return false;
  e << 1.0, 0.0;
  if (rlsmc::reward(e, 2.0, {2.0, 1.0}, 1.0) != -6.0) return false;

  rlsmc::EpisodeLog log;
  for (int i = 0; i < 70; ++i) {
    rlsmc::StepRecord rec;
    rec.reward = -1.0;
    log.steps.push_back(rec);
  }
  if (rlsmc::return_of(log, 1.0) != -70.0) return false;
  log.steps.resize(3);
  log.steps[0].reward = -1.0;
  log.steps[1].reward = -2.0;
  log.steps[2].reward = -4.0;
  return rlsmc::return_of(log, 0.5) == -3.0 && rlsmc::return_of(log, 0.0) == -1.0;
}

bool config_round_trip_property() {
  rlsmc::ExperimentConfig c = rlsmc::preset_config("desk-msd");
  c.seed = 31;
  c.hyper.q = {2.0, 0.5};
  c.init = {2.0, -1.0};
  c.use_adam = true;
  const std::string text = rlsmc::serialize(c);
  return rlsmc::serialize(rlsmc::parse_config_string(text)) == text;
}

Criterion criterion_properties() {
  std::string note;
  const bool rk4 = rk4_order_property(note);
  const bool replay = replay_properties(note);
  const bool ou = ou_variance_property(note);
  const bool contraction = contraction_property();
  const bool mu = mu_bound_property();
  const bool reward = reward_return_property();
  const bool config = config_round_trip_property();
  note += contraction ? "contraction ok; " : "contraction FAILED; ";
  note += mu ? "mu bound ok; " : "mu bound FAILED; ";
  note += reward ? "reward ok; " : "reward FAILED; ";
  note += config ? "config ok" : "config FAILED";
  return {7, "unit and property suite invariants hold",
          rk4 && replay && ou && contraction && mu && reward && config, note};
}

void report(const Criterion& c) {
  std::printf("%s  criterion %d: %s (%s)\n", c.pass ? "PASS" : "FAIL", c.id,
              c.name.c_str(), c.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  now_seconds();  // anchor the elapsed-time clock at process start
  std::vector<Criterion> results;
  results.push_back(criterion_gradients());
  report(results.back());
  results.push_back(criterion_reaching());
  report(results.back());
  results.push_back(criterion_lyapunov());
  report(results.back());
  results.push_back(criterion_null());
  report(results.back());

  std::printf("      training 3 seeds of the desk-scale preset...\n");
  std::fflush(stdout);
  const std::vector<SeedOutcome> outcomes = learning_outcomes();
  results.push_back(criterion_learning(outcomes));
  report(results.back());
  results.push_back(criterion_generalization(outcomes));
  report(results.back());

  results.push_back(criterion_properties());
  report(results.back());

  int failed = 0;
  for (const Criterion& c : results)
    if (!c.pass) ++failed;
  if (failed == 0) {
    std::printf("all %zu criteria passed [%.0f s]\n", results.size(),
                now_seconds());
    return 0;
  }
  std::printf("%d of %zu criteria FAILED [%.0f s]\n", failed, results.size(),
              now_seconds());
  return 1;
}
