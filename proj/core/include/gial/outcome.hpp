#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gial/autodiff.hpp"
#include "gial/infomax.hpp"
#include "gial/random.hpp"

namespace gial {

/// Fully connected layer x·W + b with an optional PReLU.
struct DenseLayer {
  Parameter weight;
  Parameter bias;
  Parameter slope;
  bool activate = true;

  DenseLayer(const std::string& name, std::size_t in, std::size_t out, bool activate, Rng& rng);
  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);
};

struct OutcomeGeneratorConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  /// Hidden PReLU layers per arm head, followed by one linear output unit.
  std::size_t layers = 1;
  /// Hidden layers shared by both arms before the heads split.
  std::size_t shared_trunk_layers = 0;
};

/// Ψ: two-head regressor from representations to potential outcomes.
class OutcomeGenerator {
 public:
  OutcomeGenerator(const OutcomeGeneratorConfig& config, Rng& rng);

  struct Heads {
    Var treated;  // ŷ1, n×1
    Var control;  // ŷ0, n×1
  };
  Heads forward(Tape& tape, Var representations);

  std::vector<Parameter*> parameters();
  const OutcomeGeneratorConfig& config() const noexcept { return config_; }

 private:
  OutcomeGeneratorConfig config_;
  std::vector<DenseLayer> trunk_;
  std::vector<DenseLayer> treated_;
  std::vector<DenseLayer> control_;
};

struct GeneratedOutcomes {
  Var treated;
  Var control;
  Var factual;         // ŷ_{t_i}
  Var counterfactual;  // ŷ_{1−t_i}
};

/// Treatment as an n×1 0/1 column.
Matrix treatment_column(std::span<const int> treatment);

GeneratedOutcomes generate_outcomes(Tape& tape, Var representations, std::span<const int> treatment,
                                    OutcomeGenerator& generator);

/// Plain-value potential outcomes with derived effects.
struct PotentialOutcomes {
  std::vector<double> treated;
  std::vector<double> control;

  std::vector<double> ite() const;
  double ate() const;
};

PotentialOutcomes to_potential_outcomes(const GeneratedOutcomes& g);

/// (1/n) Σ (ŷ^f − y^f)²
Var factual_loss(Var predicted, Var observed);

struct CfDiscriminatorConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  /// Hidden layers per arm head; the candidate outcome is appended to the
  /// input of every layer, including the output unit.
  std::size_t layers = 1;
};

/// Φ: two-head classifier judging whether a candidate outcome is factual.
class CfDiscriminator {
 public:
  CfDiscriminator(const CfDiscriminatorConfig& config, Rng& rng);

  /// Probabilities (m×1) from the head for `arm` given representations (m×d)
  /// and one candidate outcome per unit (m×1).
  Var head(Tape& tape, int arm, Var representations, Var candidate);

  std::vector<Parameter*> parameters();
  const CfDiscriminatorConfig& config() const noexcept { return config_; }

 private:
  CfDiscriminatorConfig config_;
  std::vector<DenseLayer> treated_;
  std::vector<DenseLayer> control_;
};

/// Both heads' judgments over a batch of m units, stacked as
/// [treatment head (m rows); control head (m rows)]. truth is 1 where the
/// candidate fed to that head was the observed outcome.
struct DiscriminatorOutput {
  Var probs;
  Matrix truth;
  std::size_t units = 0;
};

/// For arm a and unit i the candidate is y^f_i when t_i = a, else ŷ^{cf}_i.
DiscriminatorOutput discriminator_probs(Tape& tape, Var representations, std::span<const int> treatment,
                                        Var observed_factual, Var counterfactual, CfDiscriminator& disc);

/// −(1/2m) Σ_arms Σ_i [p̂ log p + (1 − p̂) log(1 − p)] with log arguments clamped.
/// With enforce_balance, each head must see equally many factual and
/// counterfactual candidates (an equal treated/control batch).
LossTerm adversarial_loss(const DiscriminatorOutput& out, bool enforce_balance = true);

}  // namespace gial
