#pragma once

#include <cmath>
#include <vector>

#include "rlsmc/errors.hpp"
#include "rlsmc/plant.hpp"

namespace rlsmc {

/// Sliding-surface coefficients a_1..a_n and the nominal switching gain.
struct SurfaceSpec {
  std::vector<double> a{1.0, 1.0};
  double mu_hat = 1.0;
  double epsilon_g = 1e-9;  // singularity guard for divisions by g

  int order() const { return static_cast<int>(a.size()); }

  void validate() const {
    if (a.empty()) throw ConfigError("surface needs at least one coefficient");
    for (double ai : a)
      if (ai <= 0.0) throw ConfigError("surface coefficients must be positive");
    if (mu_hat <= 0.0) throw ConfigError("switching gain must be positive");
  }
};

/// Sign with the tie resolved to zero, so no control impulse is injected
/// exactly on the surface.
inline double sign_of(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

/// sigma = sum_i a_i e_i.
inline double sliding_value(const SurfaceSpec& spec, const StateVector& e) {
  double sigma = 0.0;
  for (int i = 0; i < spec.order(); ++i) sigma += spec.a[i] * e[i];
  return sigma;
}

/// Model-based control for the simplified dynamics, in tracking form:
/// the equivalent part cancels the known drift of the error system and
/// the switching part drives sigma_hat to zero. Pass a zero reference for
/// the plain regulation law. `x` is the physical state of whichever
/// system is being controlled; the error state is formed internally.
inline double nominal_control(const SurfaceSpec& spec, const NominalModel& model,
                              const ReferenceSignal& ref, double t,
                              const StateVector& x) {
  const int n = model.n;
  const double g = model.g(t, x);
  if (std::abs(g) < spec.epsilon_g) throw SingularGainError(g);

  const StateVector e = tracking_state(x, ref, t);
  const double an = spec.a[n - 1];

  double shifted = 0.0;  // sum_{i<n} a_i e_{i+1}
  for (int i = 0; i + 1 < n; ++i) shifted += spec.a[i] * e[i + 1];

  const double drift = model.f(t, x) - ref.derivative(n, t);
  const double u_eq = -(shifted + an * drift) / (an * g);
  const double u_c = -spec.mu_hat * sign_of(sliding_value(spec, e)) / (an * g);
  return u_eq + u_c;
}

/// u = u_hat + u1.
inline double combined_control(double u_hat, double u1) { return u_hat + u1; }

/// Compensation term produced by the (r, mu) head: u1 = -r - mu sign(sigma).
inline double compensation_from_head(double r, double mu, double sigma) {
  return -r - mu * sign_of(sigma);
}

}  // namespace rlsmc
