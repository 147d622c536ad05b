#pragma once

#include <functional>
#include <span>
#include <string>

#include "gial/autodiff.hpp"

namespace gial {

struct GradCheckResult {
  double max_relative_error = 0.0;
  /// "<parameter>[index]" of the worst coordinate.
  std::string worst;
  std::size_t coordinates = 0;
};

/// Builds the objective on a fresh tape from the current parameter values and
/// returns the 1×1 loss node.
using Objective = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences of step h.
/// Per coordinate the error is |analytic − numeric| / max(1, |analytic|, |numeric|).
/// Parameter values are restored on return; their grad fields are overwritten.
GradCheckResult grad_check(const Objective& f, std::span<Parameter* const> params, double h = 1e-5);

}  // namespace gial
