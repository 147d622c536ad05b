#include "gial/infomax.hpp"

#include <algorithm>
#include <cmath>

#include "gial/error.hpp"

namespace gial {

CorruptedBatch corrupt(const Matrix& features, Rng& rng) {
  return corrupt_with(features, random_permutation(features.rows(), rng));
}

CorruptedBatch corrupt_with(const Matrix& features, std::vector<std::size_t> permutation) {
  if (permutation.size() != features.rows()) {
    throw DimensionError("corrupt: permutation of length " + std::to_string(permutation.size()) + " for " +
                         std::to_string(features.rows()) + " rows");
  }
  std::vector<bool> seen(permutation.size(), false);
  for (std::size_t p : permutation) {
    if (p >= permutation.size() || seen[p]) throw ContractViolation("corrupt: not a permutation");
    seen[p] = true;
  }
  CorruptedBatch batch{Matrix(features.rows(), features.cols()), std::move(permutation)};
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto src = features.row_span(batch.permutation[i]);
    std::copy(src.begin(), src.end(), batch.features.row_span(i).begin());
  }
  return batch;
}

MiDiscriminator::MiDiscriminator(std::size_t dim, Rng& rng)
    : scoring_("mi.W", uniform_matrix(dim, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng)) {}

MiDiscriminator::MiDiscriminator(Matrix scoring) : scoring_("mi.W", std::move(scoring)) {
  if (scoring_.value.rows() != scoring_.value.cols()) {
    throw DimensionError("MiDiscriminator: scoring matrix must be square, got " + scoring_.value.shape_string());
  }
}

Var mi_scores(Var representations, Var summary, Var scoring) {
  const std::size_t d = scoring.rows();
  if (scoring.cols() != d || representations.cols() != d || summary.rows() != 1 || summary.cols() != d) {
    throw DimensionError("mi_scores: R " + representations.value().shape_string() + ", s " +
                         summary.value().shape_string() + ", W " + scoring.value().shape_string());
  }
  return sigmoid(matmul(matmul(representations, scoring), transpose(summary)));
}

Var MiDiscriminator::scores(Tape& tape, Var representations, Var summary) {
  return mi_scores(representations, summary, tape.param(scoring_));
}

LossTerm mi_loss(Var positive_scores, Var negative_scores) {
  if (!positive_scores.value().same_shape(negative_scores.value()) || positive_scores.cols() != 1) {
    throw DimensionError("mi_loss: positive " + positive_scores.value().shape_string() + " vs negative " +
                         negative_scores.value().shape_string());
  }
  const std::size_t n = positive_scores.rows();
  if (n == 0) throw ContractViolation("mi_loss: empty batch");
  Tape& tape = positive_scores.tape();
  const std::size_t before = tape.saturated_logs();
  Var pos = sum(log_clamped(positive_scores, kLogClamp));
  Var neg = sum(log_clamped(affine(negative_scores, -1.0, 1.0), kLogClamp));
  Var value = scale(pos + neg, 1.0 / (2.0 * static_cast<double>(n)));
  return {value, tape.saturated_logs() - before};
}

}  // namespace gial
