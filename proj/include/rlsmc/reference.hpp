#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rlsmc/errors.hpp"

namespace rlsmc {

/// A reference trajectory y(t) together with its time derivatives.
/// derivative(0) is y itself; derivative(k) is y^(k). A reference built
/// for an order-n plant carries derivatives up to order n.
class ReferenceSignal {
public:
  using Evaluator = std::function<double(double)>;

  ReferenceSignal() = default;
  explicit ReferenceSignal(std::vector<Evaluator> derivatives)
      : derivatives_(std::move(derivatives)) {}

  double derivative(int order, double t) const {
    return derivatives_.at(static_cast<std::size_t>(order))(t);
  }

  double value(double t) const { return derivative(0, t); }

  /// Highest available derivative order.
  int max_order() const { return static_cast<int>(derivatives_.size()) - 1; }

private:
  std::vector<Evaluator> derivatives_;
};

/// y(t) = sin(t) - 1 with derivatives cycling through cos, -sin, -cos, sin.
inline ReferenceSignal sine_offset_reference(int order) {
  std::vector<ReferenceSignal::Evaluator> d;
  d.push_back([](double t) { return std::sin(t) - 1.0; });
  for (int k = 1; k <= order; ++k) {
    switch (k % 4) {
      case 1: d.push_back([](double t) { return std::cos(t); }); break;
      case 2: d.push_back([](double t) { return -std::sin(t); }); break;
      case 3: d.push_back([](double t) { return -std::cos(t); }); break;
      default: d.push_back([](double t) { return std::sin(t); }); break;
    }
  }
  return ReferenceSignal(std::move(d));
}

/// y(t) = 0; regulation about the origin.
inline ReferenceSignal zero_reference(int order) {
  std::vector<ReferenceSignal::Evaluator> d(
      static_cast<std::size_t>(order) + 1, [](double) { return 0.0; });
  return ReferenceSignal(std::move(d));
}

}  // namespace rlsmc
