#pragma once

#include <vector>

#include "gial/autodiff.hpp"
#include "gial/random.hpp"

namespace gial {

inline constexpr double kLogClamp = 1e-12;

/// Negative sample: rows of X shuffled, adjacency untouched.
/// Row i of `features` is row `permutation[i]` of the original.
struct CorruptedBatch {
  Matrix features;
  std::vector<std::size_t> permutation;
};

CorruptedBatch corrupt(const Matrix& features, Rng& rng);
CorruptedBatch corrupt_with(const Matrix& features, std::vector<std::size_t> permutation);

/// Bilinear probe d(r, s) = sigmoid(rᵀ W s) with a d×d scoring matrix W.
class MiDiscriminator {
 public:
  MiDiscriminator(std::size_t dim, Rng& rng);
  explicit MiDiscriminator(Matrix scoring);

  /// n×1 probabilities, one per row of `representations`; `summary` is 1×d.
  Var scores(Tape& tape, Var representations, Var summary);

  std::size_t dim() const noexcept { return scoring_.value.rows(); }
  Parameter& scoring() noexcept { return scoring_; }
  std::vector<Parameter*> parameters() { return {&scoring_}; }

 private:
  Parameter scoring_;
};

/// sigmoid(R W sᵀ) for R n×d, W d×d, s 1×d.
Var mi_scores(Var representations, Var summary, Var scoring);

struct LossTerm {
  Var value;
  /// Log arguments clamped at kLogClamp while forming this term.
  std::size_t saturated = 0;
};

/// (1/2n) [Σ_i log d(r_i, s) + Σ_j log(1 − d(r̃_j, s))]; always ≤ 0 and maximized in training.
LossTerm mi_loss(Var positive_scores, Var negative_scores);

}  // namespace gial
