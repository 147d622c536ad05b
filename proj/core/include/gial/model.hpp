#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gial/encoders.hpp"
#include "gial/infomax.hpp"
#include "gial/outcome.hpp"

namespace gial {

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t generator_layers = 1;
  std::size_t shared_trunk_layers = 0;
  std::size_t discriminator_layers = 1;
};

/// Encoder g, readout f, MI probe d, outcome generator Ψ and counterfactual
/// discriminator Φ. Holds its parameters in place: keep it behind a stable
/// address (the optimizer keys state on parameter addresses).
class GialModel {
 public:
  GialModel(const ModelConfig& config, std::uint64_t seed);
  GialModel(const GialModel&) = delete;
  GialModel& operator=(const GialModel&) = delete;

  Encoder& encoder() noexcept { return encoder_; }
  MiDiscriminator& mi() noexcept { return mi_; }
  OutcomeGenerator& generator() noexcept { return generator_; }
  CfDiscriminator& discriminator() noexcept { return discriminator_; }
  const ModelConfig& config() const noexcept { return config_; }

  std::vector<Parameter*> encoder_parameters() { return encoder_.parameters(); }
  std::vector<Parameter*> mi_parameters() { return mi_.parameters(); }
  std::vector<Parameter*> generator_parameters() { return generator_.parameters(); }
  std::vector<Parameter*> discriminator_parameters() { return discriminator_.parameters(); }
  std::vector<Parameter*> parameters();

  std::vector<Matrix> snapshot();
  void restore(const std::vector<Matrix>& values);

  /// ŷ1, ŷ0 for every node.
  PotentialOutcomes predict(const Matrix& features, const GraphContext& graph);

 private:
  ModelConfig config_;
  Rng init_rng_;
  Encoder encoder_;
  MiDiscriminator mi_;
  OutcomeGenerator generator_;
  CfDiscriminator discriminator_;
};

/// Everything one evaluation of the joint objective needs. Index spans select
/// units from the full graph: `supervised` for L_Ψ, `balanced` for L_{Φ,Ψ}.
struct ObjectiveInputs {
  const Matrix* features = nullptr;
  const Matrix* corrupted = nullptr;
  const GraphContext* graph = nullptr;
  std::span<const int> treatment;
  std::span<const double> factual;
  std::span<const std::size_t> supervised;
  std::span<const std::size_t> balanced;
};

struct ObjectiveTerms {
  Var representations;
  Var factual;       // L_Ψ
  LossTerm mi;       // L_m
  LossTerm adversarial;  // L_{Φ,Ψ}
  Var positive_scores;
  Var negative_scores;
};

struct ObjectiveOptions {
  /// Feed the discriminator a detached copy of R, so L_{Φ,Ψ} sends no gradient to the encoder.
  bool detach_discriminator_input = false;
  bool enforce_balance = true;
};

/// Builds L_Ψ, L_m and L_{Φ,Ψ} on one tape.
ObjectiveTerms build_objective(Tape& tape, GialModel& model, const ObjectiveInputs& in,
                               const ObjectiveOptions& options = {});

/// L_Ψ + α L_m − β L_{Φ,Ψ}
Var joint_objective(const ObjectiveTerms& terms, double alpha, double beta);

}  // namespace gial
