#include "gial/outcome.hpp"

#include <cmath>
#include <numeric>

#include "gial/encoders.hpp"
#include "gial/error.hpp"

namespace gial {

DenseLayer::DenseLayer(const std::string& name, std::size_t in, std::size_t out, bool act, Rng& rng)
    : weight(name + ".W", uniform_matrix(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
      bias(name + ".b", Matrix(1, out), false),
      slope(name + ".prelu", Matrix(1, 1, kPreluInitialSlope), false),
      activate(act) {}

Var DenseLayer::forward(Tape& tape, Var x) {
  Var y = add_row(matmul(x, tape.param(weight)), tape.param(bias));
  return activate ? prelu(y, tape.param(slope)) : y;
}

void DenseLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
  if (activate) out.push_back(&slope);
}

namespace {

std::vector<DenseLayer> make_head(const std::string& name, std::size_t in, std::size_t hidden,
                                  std::size_t layers, Rng& rng) {
  std::vector<DenseLayer> head;
  for (std::size_t l = 0; l < layers; ++l) {
    head.emplace_back(name + ".hidden" + std::to_string(l), l == 0 ? in : hidden, hidden, true, rng);
  }
  head.emplace_back(name + ".out", layers == 0 ? in : hidden, 1, false, rng);
  return head;
}

}  // namespace

OutcomeGenerator::OutcomeGenerator(const OutcomeGeneratorConfig& config, Rng& rng) : config_(config) {
  if (config.input_dim == 0 || config.hidden_dim == 0) {
    throw ContractViolation("OutcomeGenerator: input_dim and hidden_dim must be positive");
  }
  std::size_t in = config.input_dim;
  for (std::size_t l = 0; l < config.shared_trunk_layers; ++l) {
    trunk_.emplace_back("generator.trunk" + std::to_string(l), in, config.hidden_dim, true, rng);
    in = config.hidden_dim;
  }
  treated_ = make_head("generator.treated", in, config.hidden_dim, config.layers, rng);
  control_ = make_head("generator.control", in, config.hidden_dim, config.layers, rng);
}

OutcomeGenerator::Heads OutcomeGenerator::forward(Tape& tape, Var representations) {
  if (representations.cols() != config_.input_dim) {
    throw DimensionError("OutcomeGenerator: representation width " + std::to_string(representations.cols()) +
                         ", expected " + std::to_string(config_.input_dim));
  }
  Var h = representations;
  for (DenseLayer& layer : trunk_) h = layer.forward(tape, h);
  Var y1 = h;
  for (DenseLayer& layer : treated_) y1 = layer.forward(tape, y1);
  Var y0 = h;
  for (DenseLayer& layer : control_) y0 = layer.forward(tape, y0);
  return {y1, y0};
}

std::vector<Parameter*> OutcomeGenerator::parameters() {
  std::vector<Parameter*> out;
  for (auto* group : {&trunk_, &treated_, &control_})
    for (DenseLayer& layer : *group) layer.collect(out);
  return out;
}

Matrix treatment_column(std::span<const int> treatment) {
  Matrix t(treatment.size(), 1);
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    if (treatment[i] != 0 && treatment[i] != 1) {
      throw ContractViolation("treatment[" + std::to_string(i) + "] not in {0,1}");
    }
    t[i] = treatment[i];
  }
  return t;
}

GeneratedOutcomes generate_outcomes(Tape& tape, Var representations, std::span<const int> treatment,
                                    OutcomeGenerator& generator) {
  if (treatment.size() != representations.rows()) {
    throw DimensionError("generate_outcomes: " + std::to_string(treatment.size()) + " treatments for " +
                         std::to_string(representations.rows()) + " units");
  }
  const auto heads = generator.forward(tape, representations);
  Matrix t = treatment_column(treatment);
  Matrix not_t = t;
  for (double& v : not_t.values()) v = 1.0 - v;
  Var tv = tape.constant(std::move(t));
  Var nv = tape.constant(std::move(not_t));
  Var factual = hadamard(tv, heads.treated) + hadamard(nv, heads.control);
  Var counterfactual = hadamard(nv, heads.treated) + hadamard(tv, heads.control);
  return {heads.treated, heads.control, factual, counterfactual};
}

std::vector<double> PotentialOutcomes::ite() const {
  std::vector<double> out(treated.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = treated[i] - control[i];
  return out;
}

double PotentialOutcomes::ate() const {
  const auto e = ite();
  if (e.empty()) throw ContractViolation("PotentialOutcomes::ate: no units");
  return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

PotentialOutcomes to_potential_outcomes(const GeneratedOutcomes& g) {
  const auto& y1 = g.treated.value().storage();
  const auto& y0 = g.control.value().storage();
  return {y1, y0};
}

Var factual_loss(Var predicted, Var observed) {
  if (!predicted.value().same_shape(observed.value())) {
    throw DimensionError("factual_loss: " + predicted.value().shape_string() + " vs " +
                         observed.value().shape_string());
  }
  return mean(square(predicted - observed));
}

CfDiscriminator::CfDiscriminator(const CfDiscriminatorConfig& config, Rng& rng) : config_(config) {
  if (config.input_dim == 0 || config.hidden_dim == 0) {
    throw ContractViolation("CfDiscriminator: input_dim and hidden_dim must be positive");
  }
  auto build = [&](const std::string& name) {
    std::vector<DenseLayer> head;
    std::size_t in = config.input_dim;
    for (std::size_t l = 0; l < config.layers; ++l) {
      head.emplace_back(name + ".hidden" + std::to_string(l), in + 1, config.hidden_dim, true, rng);
      in = config.hidden_dim;
    }
    head.emplace_back(name + ".out", in + 1, 1, false, rng);
    return head;
  };
  treated_ = build("discriminator.treated");
  control_ = build("discriminator.control");
}

Var CfDiscriminator::head(Tape& tape, int arm, Var representations, Var candidate) {
  if (arm != 0 && arm != 1) throw ContractViolation("CfDiscriminator::head: arm must be 0 or 1");
  if (representations.cols() != config_.input_dim || candidate.cols() != 1 ||
      candidate.rows() != representations.rows()) {
    throw DimensionError("CfDiscriminator: representations " + representations.value().shape_string() +
                         ", candidate " + candidate.value().shape_string());
  }
  auto& layers = arm == 1 ? treated_ : control_;
  Var h = representations;
  for (DenseLayer& layer : layers) {
    const Var parts[] = {h, candidate};
    h = layer.forward(tape, concat_cols(parts));
  }
  return sigmoid(h);
}

std::vector<Parameter*> CfDiscriminator::parameters() {
  std::vector<Parameter*> out;
  for (DenseLayer& layer : treated_) layer.collect(out);
  for (DenseLayer& layer : control_) layer.collect(out);
  return out;
}

DiscriminatorOutput discriminator_probs(Tape& tape, Var representations, std::span<const int> treatment,
                                        Var observed_factual, Var counterfactual, CfDiscriminator& disc) {
  const std::size_t m = representations.rows();
  if (treatment.size() != m || observed_factual.rows() != m || counterfactual.rows() != m ||
      observed_factual.cols() != 1 || counterfactual.cols() != 1) {
    throw DimensionError("discriminator_probs: inconsistent batch of " + std::to_string(m) + " units");
  }
  const Matrix t = treatment_column(treatment);
  Matrix not_t = t;
  for (double& v : not_t.values()) v = 1.0 - v;
  Var tv = tape.constant(t);
  Var nv = tape.constant(not_t);

  // Treatment head sees y^f for treated units, ŷ^{cf} for controls; control head the reverse.
  Var cand_treated = hadamard(tv, observed_factual) + hadamard(nv, counterfactual);
  Var cand_control = hadamard(nv, observed_factual) + hadamard(tv, counterfactual);
  const Var heads[] = {disc.head(tape, 1, representations, cand_treated),
                       disc.head(tape, 0, representations, cand_control)};

  DiscriminatorOutput out;
  out.probs = concat_rows(heads);
  out.truth = Matrix(2 * m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    out.truth[i] = t[i];
    out.truth[m + i] = not_t[i];
  }
  out.units = m;
  return out;
}

LossTerm adversarial_loss(const DiscriminatorOutput& out, bool enforce_balance) {
  const std::size_t total = out.probs.rows();
  if (total == 0 || out.truth.rows() != total || out.truth.cols() != 1 || out.probs.cols() != 1) {
    throw DimensionError("adversarial_loss: probs " + out.probs.value().shape_string() + ", truth " +
                         out.truth.shape_string());
  }
  if (enforce_balance) {
    if (total != 2 * out.units) throw ContractViolation("adversarial_loss: expected two heads of equal size");
    for (std::size_t head = 0; head < 2; ++head) {
      double ones = 0.0;
      for (std::size_t i = 0; i < out.units; ++i) ones += out.truth[head * out.units + i];
      if (2.0 * ones != static_cast<double>(out.units)) {
        throw ContractViolation("adversarial_loss: unbalanced batch (" + std::to_string(ones) +
                                " factual of " + std::to_string(out.units) + " in one head)");
      }
    }
  }
  Tape& tape = out.probs.tape();
  const std::size_t before = tape.saturated_logs();
  Matrix neg_truth = out.truth;
  for (double& v : neg_truth.values()) v = 1.0 - v;
  Var pt = tape.constant(out.truth);
  Var nt = tape.constant(std::move(neg_truth));
  Var ll = hadamard(pt, log_clamped(out.probs, kLogClamp)) +
           hadamard(nt, log_clamped(affine(out.probs, -1.0, 1.0), kLogClamp));
  Var value = scale(sum(ll), -1.0 / static_cast<double>(total));
  return {value, tape.saturated_logs() - before};
}

}  // namespace gial
