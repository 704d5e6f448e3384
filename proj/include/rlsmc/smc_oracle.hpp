#pragma once

#include <cmath>

#include "rlsmc/smc.hpp"
#include "rlsmc/uncertainty.hpp"

namespace rlsmc {

/// The exact compensation pair, computable only with privileged access to
/// the true mismatch. Used to certify the Lyapunov decrease of the
/// compensated loop and as a behavioral reference for the learned head.
struct Compensation {
  double r = 0.0;
  double mu = 0.0;
};

/// Evaluates the ideal (r, mu) for the combined controller at time t,
/// given the original state x and the side-by-side simplified state x_hat.
/// With u1 = -r - mu sign(sigma) and sigma built on x - x_hat, the sliding
/// variable obeys sigma' = -sign(sigma), so V = sigma^2/2 cannot grow.
///
/// Note on mu: the switching gain is 1/(a_n (g + delta_g)) with no sign
/// factor. Folding sign(sigma) into mu would square the sign inside u1 and
/// destroy the decrease property for sigma < 0.
inline Compensation ideal_compensation(const SurfaceSpec& spec, const Plant& plant,
                                       const UncertaintyOracle& oracle,
                                       const ReferenceSignal& ref, double t,
                                       const StateVector& x,
                                       const StateVector& x_hat) {
  const NominalModel& model = plant.nominal();
  const int n = model.n;
  const double an = spec.a[n - 1];

  const double f = model.f(t, x);
  const double g = model.g(t, x);
  const Mismatch d = oracle.at(t, x);
  if (std::abs(g) < spec.epsilon_g) throw SingularGainError(g);
  const double gain = an * (g + d.delta_g);
  if (std::abs(g + d.delta_g) < spec.epsilon_g) throw SingularGainError(g + d.delta_g);

  const StateVector e = tracking_state(x, ref, t);
  const StateVector e_hat = tracking_state(x_hat, ref, t);
  const double sig_e = sliding_value(spec, e);
  const double sig_e_hat = sliding_value(spec, e_hat);

  double shifted = 0.0;  // sum_{i<n} a_i e_{i+1}
  for (int i = 0; i + 1 < n; ++i) shifted += spec.a[i] * e[i + 1];
  const double drift = f - ref.derivative(n, t);

  const double bracket = an * drift + shifted + spec.mu_hat * sign_of(sig_e);
  const double r = (-(d.delta_g / g) * bracket + an * d.delta_f +
                    spec.mu_hat * (sign_of(sig_e_hat) - sign_of(sig_e))) /
                   gain;
  return {r, 1.0 / gain};
}

}  // namespace rlsmc
