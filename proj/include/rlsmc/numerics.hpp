#pragma once

#include <concepts>
#include <utility>

#include "rlsmc/errors.hpp"

namespace rlsmc {

/// A derivative field maps (t, x) to dx/dt. Control inputs, when present,
/// are bound into the field by the caller: frozen over the interval for a
/// sampled-data loop, or evaluated as state feedback for a continuous law.
template <typename F>
concept DerivativeField =
    requires(F f, double t, const StateVector& x) {
      { f(t, x) } -> std::convertible_to<StateVector>;
    };

namespace detail {

template <DerivativeField F>
StateVector eval_checked(F& f, double t, const StateVector& x) {
  StateVector dx = f(t, x);
  if (!dx.allFinite()) throw IntegrationError(t, x);
  return dx;
}

}  // namespace detail

/// One classical 4th-order Runge-Kutta step of size h from (t, x).
template <DerivativeField F>
StateVector rk4_step(F&& f, double t, const StateVector& x, double h) {
  const StateVector k1 = detail::eval_checked(f, t, x);
  const StateVector k2 = detail::eval_checked(f, t + h / 2, x + (h / 2) * k1);
  const StateVector k3 = detail::eval_checked(f, t + h / 2, x + (h / 2) * k2);
  const StateVector k4 = detail::eval_checked(f, t + h, x + h * k3);
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Advance the state across one sampling interval dt using `substeps`
/// equal RK4 steps. The field is held fixed for the whole interval, so a
/// zero-order-hold control is simply a field with the input baked in.
template <DerivativeField F>
StateVector integrate_sample(F&& f, double t0, StateVector x0, double dt,
                             int substeps) {
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    x0 = rk4_step(f, t0 + i * h, x0, h);
  }
  return x0;
}

}  // namespace rlsmc
