#pragma once

#include "rlsmc/plant.hpp"

namespace rlsmc {

/// True plant-model mismatch at a point.
struct Mismatch {
  double delta_f = 0.0;
  double delta_g = 0.0;
};

/// Privileged read access to a plant's mismatch terms. Only the ideal
/// compensation law and tests construct one; controller modules take a
/// NominalModel and have no path to this type.
class UncertaintyOracle {
public:
  explicit UncertaintyOracle(const Plant& plant) : plant_(&plant) {}

  Mismatch at(double t, const StateVector& x) const {
    return {plant_->delta_f_(t, x), plant_->delta_g_(t, x)};
  }

private:
  const Plant* plant_;
};

}  // namespace rlsmc
