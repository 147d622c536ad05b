#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gial/dataset.hpp"
#include "gial/metrics.hpp"
#include "gial/model.hpp"

namespace gial {

/// Which player the encoder belongs to in the alternating minimax updates.
enum class EncoderRole {
  /// Encoder ascends α L_m in the maximizer step and descends L_Ψ − β L_{Φ,Ψ}
  /// in the minimizer step. The discriminator sees a detached R in the
  /// maximizer step.
  shared,
  /// Encoder only moves in the maximizer step, on α L_m − β L_{Φ,Ψ}.
  max_only,
};

enum class SelectionCriterion {
  /// Factual MSE on the validation split.
  factual_mse,
  /// √PEHE on the validation split; needs ground truth (oracle studies only).
  oracle_pehe,
  /// Keep the last epoch and never stop early; the factual MSE is still traced.
  /// For runs without a factual loss, where no criterion tracks the objective.
  final_epoch,
};

inline constexpr std::array<double, 5> kTradeoffGrid = {0.0, 1e-4, 1e-3, 1e-2, 1e-1};
inline constexpr std::array<std::size_t, 4> kRepresentationDimGrid = {50, 100, 150, 200};
inline constexpr std::array<std::size_t, 3> kEncoderLayerGrid = {1, 2, 3};
inline constexpr std::array<std::size_t, 4> kHeadGrid = {1, 2, 3, 4};
inline constexpr std::array<std::size_t, 4> kGeneratorLayerGrid = {1, 2, 3, 4};

struct TrainConfig {
  double alpha = 1e-2;
  double beta = 1e-2;
  EncoderKind encoder = EncoderKind::gcn;
  std::size_t representation_dim = 50;
  std::size_t encoder_layers = 1;
  std::size_t attention_heads = 1;
  std::size_t generator_layers = 1;
  std::size_t shared_trunk_layers = 0;
  std::size_t discriminator_layers = 1;
  double learning_rate = 1e-3;
  double l2_weight = 1e-4;
  std::size_t patience = 100;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;
  /// Maximizer steps per minimizer step.
  std::size_t discriminator_steps = 1;
  EncoderRole encoder_role = EncoderRole::shared;
  SelectionCriterion selection = SelectionCriterion::factual_mse;
  /// When false the minimizer drops L_Ψ (MI-only or adversarial-only studies).
  bool use_factual_loss = true;
  /// Require every grid-valued field to lie in its hyperparameter grid.
  bool strict_grid = false;

  /// Throws ContractViolation on invalid values.
  void validate() const;
  ModelConfig model_config(std::size_t input_dim) const;
};

std::string to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are a DataError.
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base = {});
TrainConfig load_train_config(const std::string& path);
std::string to_string(EncoderRole role);
std::string to_string(SelectionCriterion s);

struct EpochRecord {
  std::size_t epoch = 0;
  double factual_loss = 0.0;      // L_Ψ on the training split
  double mi_loss = 0.0;           // L_m
  double adversarial_loss = 0.0;  // L_{Φ,Ψ}
  double validation = 0.0;        // selection criterion after the epoch
  std::size_t saturated_logs = 0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;

  /// CSV with header epoch,factual_loss,mi_loss,adversarial_loss,validation,saturated_logs.
  std::string to_csv() const;
};

struct TrainResult {
  std::unique_ptr<GialModel> model;
  TrainTrace trace;
  Split split;
  GraphContext graph;
};

/// Alternating minimax training with early stopping; the best-epoch
/// parameters are restored before returning. Throws NumericalError naming the
/// loss term when any loss becomes non-finite.
TrainResult train(const Dataset& data, const Split& split, const TrainConfig& config);
/// Splits 60/20/20 with config.seed first.
TrainResult train(const Dataset& data, const TrainConfig& config);

/// Test-split metrics of a trained model, plus census and configuration identity.
MetricsReport evaluate(TrainResult& result, const Dataset& data, const TrainConfig& config,
                       const std::string& variant = "full");

enum class Variant { full, no_smi, no_cd };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
/// no_smi zeroes α, no_cd zeroes β; everything else is kept.
TrainConfig apply_variant(TrainConfig config, Variant v);

MetricsReport ablate(const Dataset& data, const TrainConfig& config, Variant variant);

struct SweepPoint {
  double alpha = 0.0;
  double beta = 0.0;
  MetricsReport report;
};

/// One independent run per (α, β) pair, α-major order. Runs execute on up to
/// `jobs` threads; results do not depend on `jobs`.
std::vector<SweepPoint> sensitivity_sweep(const Dataset& data, const TrainConfig& base,
                                          std::span<const double> alphas, std::span<const double> betas,
                                          std::size_t jobs = 1);

/// alpha,beta,sqrt_pehe,eps_ate,factual_mse_test,best_epoch
std::string sweep_to_csv(std::span<const SweepPoint> points);

/// Mean d(r_i, s) over positives and over row-shuffled negatives for a fixed permutation.
struct MiDiagnostics {
  double positive_mean = 0.0;
  double negative_mean = 0.0;
};
MiDiagnostics mi_diagnostics(GialModel& model, const Matrix& features, const GraphContext& graph,
                             const std::vector<std::size_t>& permutation);

}  // namespace gial
