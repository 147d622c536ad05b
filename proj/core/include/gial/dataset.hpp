#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gial/graph.hpp"
#include "gial/matrix.hpp"

namespace gial {

/// Networked observational data: features X, graph A, treatment t and
/// factual outcome y^f per unit. mu0/mu1 (noiseless potential outcomes) and
/// latent (hidden confounders) are evaluation-only and may be empty.
struct Dataset {
  Matrix features;
  Graph graph;
  std::vector<int> treatment;
  std::vector<double> factual;
  std::vector<double> mu0;
  std::vector<double> mu1;
  Matrix latent;

  std::size_t size() const noexcept { return treatment.size(); }
  bool has_ground_truth() const noexcept { return !mu0.empty(); }
  /// μ1 − μ0 per unit; throws ContractViolation without ground truth.
  std::vector<double> true_ite() const;
  /// Throws DataError when lengths or values are inconsistent.
  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

inline constexpr std::array<double, 3> kDefaultSplit = {0.6, 0.2, 0.2};

/// Disjoint, exhaustive, seed-deterministic split of 0..n-1 (each part sorted).
/// Sizes are round(f0·n) and round(f1·n), the test split takes the rest.
/// Throws ContractViolation when fractions do not sum to 1 or a part would be empty.
Split split_indices(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

// On-disk layout, all paths in the manifest relative to its directory:
//   manifest.json  {"nodes", "feature_dim", "features", "edges", "arrays", ["latent"]}
//   features.txt   one line per node, space-separated "index:value" pairs (zeros omitted)
//   edges.tsv      "u<TAB>v" per line
//   arrays.csv     headerless columns t,y_f[,mu0,mu1]
//   latent.csv     headerless rows of the hidden confounders

/// Writes the dataset into `dir` (created if needed) and returns the manifest path.
std::filesystem::path save_dataset(const Dataset& data, const std::filesystem::path& dir);
/// Throws DataError (with line numbers for text files) on malformed input.
Dataset load_dataset(const std::filesystem::path& manifest);

}  // namespace gial
