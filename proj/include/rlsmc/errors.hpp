#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rlsmc {

using StateVector = Eigen::VectorXd;

/// Base class for all failures raised by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A derivative evaluation produced a non-finite value; carries the
/// time and state at which integration broke down.
class IntegrationError : public Error {
public:
  IntegrationError(double t, StateVector x)
      : Error(describe(t, x)), time_(t), state_(std::move(x)) {}

  double time() const noexcept { return time_; }
  const StateVector& state() const noexcept { return state_; }

private:
  static std::string describe(double t, const StateVector& x) {
    std::ostringstream oss;
    oss << "non-finite derivative at t=" << t << ", x=[" << x.transpose() << "]";
    return oss.str();
  }

  double time_;
  StateVector state_;
};

/// The input gain g(t,x) fell below the configured singularity guard.
class SingularGainError : public Error {
public:
  explicit SingularGainError(double g)
      : Error("input gain magnitude " + std::to_string(g) +
              " below singularity guard") {}
};

/// A network evaluation or parameter update produced non-finite values.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A batch was requested from a replay buffer holding no transitions.
class EmptyBufferError : public Error {
public:
  EmptyBufferError() : Error("cannot sample from an empty replay buffer") {}
};

}  // namespace rlsmc
