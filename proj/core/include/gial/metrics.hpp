#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "gial/graph.hpp"

namespace gial {

/// |mean(true) − mean(est)|
double eps_ate(std::span<const double> true_ite, std::span<const double> est_ite);

/// sqrt(mean((true − est)²))
double sqrt_pehe(std::span<const double> true_ite, std::span<const double> est_ite);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

struct MetricsReport {
  std::string variant = "full";
  /// NaN when the dataset carries no ground truth.
  double sqrt_pehe = 0.0;
  double eps_ate = 0.0;
  double factual_mse_train = 0.0;
  double factual_mse_validation = 0.0;
  double factual_mse_test = 0.0;
  EdgeCensus census;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double runtime_seconds = 0.0;
};

/// Field-for-field JSON; `runtime_seconds` is the only timing field.
std::string to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const std::string& text);

/// JSON for the census alone, as printed by the analyze command.
std::string census_to_json(const EdgeCensus& census);

/// 16 hex digits of FNV-1a over the given text.
std::string fingerprint(const std::string& text);

}  // namespace gial
