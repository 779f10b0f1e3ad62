#pragma once

#include "ncelm/elm.hpp"
#include "ncelm/errors.hpp"

#include <cmath>
#include <cstdint>

namespace ncelm {

/// Hyperparameters of one ensemble fit. Defaults: C = 1 and 10 iterations as
/// in the reference convergence experiment; the rest are project choices.
struct NcelmConfig {
  int learners = 5;         // S
  int hidden = 50;          // D
  double C = 1.0;           // inverse ridge strength
  double lambda = 1e-6;     // diversity penalty weight
  int max_iterations = 10;
  double tolerance = 0.0;   // on the squared-L2 step distance; 0 disables early stopping
  std::uint64_t seed = 1;   // learner s uses seed + s
  Activation activation = Activation::sigmoid;

  void validate() const {
    if (learners < 1) throw ConfigError("learners must be >= 1");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("C must be a positive finite number");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a non-negative finite number");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
  }
};

}  // namespace ncelm
