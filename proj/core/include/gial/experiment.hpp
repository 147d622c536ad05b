#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gial/datagen.hpp"
#include "gial/training.hpp"

namespace gial {

/// Trains one variant, evaluates on the test split and writes
/// `<out>/report<suffix>.json` and `<out>/trace<suffix>.csv`.
MetricsReport run_experiment(const Dataset& data, const TrainConfig& config, const std::filesystem::path& out_dir,
                             Variant variant = Variant::full, const std::string& suffix = "");

/// One run per variant; files are suffixed with `_<variant>`, plus a summary
/// `ablation.csv` (variant,sqrt_pehe,eps_ate,factual_mse_test).
std::vector<MetricsReport> run_ablation(const Dataset& data, const TrainConfig& config,
                                        const std::filesystem::path& out_dir, std::span<const Variant> variants);

/// Writes `sweep.csv` and `sweep.json` (array of reports, α-major).
std::vector<SweepPoint> run_sweep(const Dataset& data, const TrainConfig& config, std::span<const double> alphas,
                                  std::span<const double> betas, std::size_t jobs,
                                  const std::filesystem::path& out_dir);

/// Generates a dataset, saves it under `out_dir` together with
/// `gen_config.json`, and returns the manifest path.
std::filesystem::path generate_to_dir(const GenConfig& config, const std::filesystem::path& out_dir,
                                      std::vector<std::string>* warnings = nullptr);

/// One treatment value (0 or 1) per line, or the first comma-separated field
/// of each line, so an arrays file can be passed directly. '#' lines and
/// blank lines are skipped.
std::vector<int> read_treatment(std::istream& in);
std::vector<int> read_treatment_file(const std::filesystem::path& path);

/// Census of an edge list against a treatment vector; the node count is the
/// treatment length.
EdgeCensus analyze_files(const std::filesystem::path& edges, const std::filesystem::path& treatment);

/// Header plus one row: nodes,edges,homogeneous,heterogeneous,expected_homogeneous,
/// expected_heterogeneous,observed_ratio,expected_ratio
std::string census_to_csv(const EdgeCensus& census);

/// Writes text to a file, creating parent directories. DataError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace gial
