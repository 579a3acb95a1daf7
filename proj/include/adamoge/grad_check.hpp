#pragma once

#include <functional>
#include <string>

#include "adamoge/parameter.hpp"
#include "adamoge/tape.hpp"

namespace adamoge {

// Builds the loss on the given tape from the store's current values.
using LossBuilder = std::function<Var(Tape&, ParameterStore&)>;
using ParameterFilter = std::function<bool(const Parameter&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;  // "name[index]"
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Compares reverse-mode gradients with central differences
// (f(theta+eps) - f(theta-eps)) / (2 eps) for every trainable scalar accepted
// by `filter`. Relative error is |a - n| / max(|a|, |n|, floor); raise the
// floor when the loss is large enough that difference roundoff exceeds 1e-8.
// Throws NumericError naming the parameter when a loss evaluation is not finite.
GradCheckResult grad_check(const LossBuilder& loss, ParameterStore& store, double eps,
                           const ParameterFilter& filter = {}, double floor = 1e-8);

}  // namespace adamoge
