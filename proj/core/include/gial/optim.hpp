#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include "gial/autodiff.hpp"

namespace gial {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Added as l2_weight · w to the gradient of every parameter with decay set.
  double l2_weight = 0.0;
};

/// Moment accumulators for one parameter.
struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam. State is keyed by parameter address, so the
/// parameters must not move while the optimizer is in use. Each parameter
/// keeps its own step counter; updating a subset leaves the others untouched.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update to each listed parameter from its accumulated grad.
  /// Throws ContractViolation if a parameter has no gradient from a backward pass.
  void step(std::span<Parameter* const> params);

  const AdamOptions& options() const noexcept { return options_; }
  const AdamState* state(const Parameter& p) const;

 private:
  AdamOptions options_;
  std::unordered_map<const Parameter*, AdamState> states_;
};

}  // namespace gial
