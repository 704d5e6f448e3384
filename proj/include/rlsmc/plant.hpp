#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "rlsmc/errors.hpp"
#include "rlsmc/reference.hpp"

namespace rlsmc {

/// Scalar evaluator over (t, x), used for drift and input-gain terms.
using ScalarField = std::function<double(double, const StateVector&)>;

/// The controller-facing view of a plant in normal form: chain structure
/// x_i' = x_{i+1} with drift f and input gain g in the last equation.
/// Controllers see only this; mismatch terms live on the Plant and are
/// reachable solely through UncertaintyOracle.
struct NominalModel {
  int n = 0;
  ScalarField f;
  ScalarField g;
};

class UncertaintyOracle;

/// A normal-form plant with unknown additive mismatch (delta_f, delta_g)
/// in the last state equation. The mismatch evaluators are private: the
/// simulator folds them into original_derivative, and test/oracle code
/// reads them through UncertaintyOracle. There is no controller-facing
/// accessor.
class Plant {
public:
  Plant(NominalModel nominal, ScalarField delta_f, ScalarField delta_g)
      : nominal_(std::move(nominal)),
        delta_f_(std::move(delta_f)),
        delta_g_(std::move(delta_g)) {}

  int dimension() const { return nominal_.n; }
  const NominalModel& nominal() const { return nominal_; }

  /// True system: x_n' = f + delta_f + (g + delta_g) u. Simulator-only path.
  StateVector original_derivative(double t, const StateVector& x, double u) const {
    StateVector dx = chain(x);
    dx[nominal_.n - 1] = nominal_.f(t, x) + delta_f_(t, x) +
                         (nominal_.g(t, x) + delta_g_(t, x)) * u;
    return dx;
  }

  /// Simplified model: x_n' = f + g u.
  StateVector simplified_derivative(double t, const StateVector& x, double u) const {
    StateVector dx = chain(x);
    dx[nominal_.n - 1] = nominal_.f(t, x) + nominal_.g(t, x) * u;
    return dx;
  }

private:
  StateVector chain(const StateVector& x) const {
    StateVector dx = StateVector::Zero(nominal_.n);
    for (int i = 0; i + 1 < nominal_.n; ++i) dx[i] = x[i + 1];
    return dx;
  }

  NominalModel nominal_;
  ScalarField delta_f_;
  ScalarField delta_g_;

  friend class UncertaintyOracle;
};

/// Nonlinear mass-spring-damper and the linear model available for it.
/// True dynamics: m x2' = -c x2|x2| - k x1 - b x1^3 + u.
/// Available model: m_hat x2' = -c_hat x2 - k_hat x1 + u.
struct MassSpringDamperParams {
  double m = 0.8;      // kg
  double c = 2.2;      // N s/m, quadratic damper
  double k = 5.5;      // N/m
  double b = 1.5;      // N/m^3
  double m_hat = 1.0;  // kg
  double c_hat = 2.0;  // N s/m, linear damper
  double k_hat = 5.0;  // N/m

  void validate() const {
    if (m <= 0.0 || m_hat <= 0.0)
      throw ConfigError("mass-spring-damper masses must be strictly positive");
  }
};

/// Builds the two-state plant. The mismatch is the literal difference
/// between the true and the available dynamics at the same state, so the
/// nominal model plus (delta_f, delta_g) reproduces the true system exactly.
inline Plant make_msd_plant(const MassSpringDamperParams& p) {
  p.validate();
  auto f_true = [p](double, const StateVector& x) {
    return (-p.c * x[1] * std::abs(x[1]) - p.k * x[0] - p.b * x[0] * x[0] * x[0]) / p.m;
  };
  auto f_nom = [p](double, const StateVector& x) {
    return (-p.k_hat * x[0] - p.c_hat * x[1]) / p.m_hat;
  };
  const double g_true = 1.0 / p.m;
  const double g_nom = 1.0 / p.m_hat;

  NominalModel nominal{2, f_nom, [g_nom](double, const StateVector&) { return g_nom; }};
  ScalarField delta_f = [f_true, f_nom](double t, const StateVector& x) {
    return f_true(t, x) - f_nom(t, x);
  };
  ScalarField delta_g = [g_true, g_nom](double, const StateVector&) {
    return g_true - g_nom;
  };
  return Plant(std::move(nominal), std::move(delta_f), std::move(delta_g));
}

/// Tracking error state: e_i = x_i - y^(i-1)(t).
inline StateVector tracking_state(const StateVector& x, const ReferenceSignal& ref,
                                  double t) {
  StateVector e(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    e[i] = x[i] - ref.derivative(static_cast<int>(i), t);
  }
  return e;
}

}  // namespace rlsmc
