#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gial/dataset.hpp"

namespace gial {

/// Parameters of the synthetic networked-data generator.
///
/// Hidden confounders z_i come from a Gaussian mixture with one component per
/// topic. Features are a sparse nonnegative noisy projection of z. Edge
/// probability grows as exp(homophily · cos(z_i, z_j)), rescaled to hit
/// avg_degree. Treatment propensity is sigmoid(bias · standardized score of
/// the node's z averaged with its neighbors' z), so bias = 0 gives 0.5
/// everywhere. Potential outcomes are linear in the same aggregate.
struct GenConfig {
  std::size_t nodes = 1000;
  std::size_t topic_dim = 8;
  std::size_t feature_dim = 40;
  double homophily = 2.0;
  double bias = 1.0;
  double avg_degree = 10.0;
  double outcome_noise = 1.0;
  double feature_noise = 0.5;
  /// Probability that a (topic, feature) loading is nonzero.
  double feature_density = 0.25;
  /// Spread of z around its topic center.
  double topic_spread = 0.35;
  double outcome_scale = 2.0;
  /// Added to μ1 on top of the unit-level effect.
  double effect_offset = 1.0;
  std::uint64_t seed = 0;

  /// Throws ContractViolation on invalid values.
  void validate() const;
};

struct GenerationResult {
  Dataset data;
  std::vector<double> propensity;
  /// Non-fatal observations, e.g. an empty graph.
  std::vector<std::string> warnings;
};

/// z, X and edges come from seed-derived streams that do not depend on bias,
/// and treatment draws reuse one uniform per unit, so changing only `bias`
/// changes only t and y^f.
GenerationResult generate(const GenConfig& config);

GenConfig gen_config_from_json(const std::string& text);
std::string to_json(const GenConfig& config);
GenConfig load_gen_config(const std::string& path);

}  // namespace gial
