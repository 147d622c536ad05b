#include "gial/model.hpp"

#include "gial/error.hpp"

namespace gial {

namespace {

Rng& checked(const ModelConfig& config, Rng& rng) {
  if (config.encoder.hidden_dim == 0) throw ContractViolation("ModelConfig: hidden_dim must be positive");
  return rng;
}

}  // namespace

GialModel::GialModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      init_rng_(derive_rng(seed, 100)),
      encoder_(config.encoder, checked(config, init_rng_)),
      mi_(config.encoder.hidden_dim, init_rng_),
      generator_({config.encoder.hidden_dim, config.encoder.hidden_dim, config.generator_layers,
                  config.shared_trunk_layers},
                 init_rng_),
      discriminator_({config.encoder.hidden_dim, config.encoder.hidden_dim, config.discriminator_layers},
                     init_rng_) {}

std::vector<Parameter*> GialModel::parameters() {
  std::vector<Parameter*> out = encoder_parameters();
  for (Parameter* p : mi_.parameters()) out.push_back(p);
  for (Parameter* p : generator_.parameters()) out.push_back(p);
  for (Parameter* p : discriminator_.parameters()) out.push_back(p);
  return out;
}

std::vector<Matrix> GialModel::snapshot() {
  std::vector<Matrix> out;
  for (Parameter* p : parameters()) out.push_back(p->value);
  return out;
}

void GialModel::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ContractViolation("GialModel::restore: snapshot size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!values[i].same_shape(params[i]->value)) throw DimensionError("GialModel::restore: shape mismatch");
    params[i]->value = values[i];
  }
}

PotentialOutcomes GialModel::predict(const Matrix& features, const GraphContext& graph) {
  Tape tape;
  Var r = encoder_.forward(tape, tape.constant(features), graph);
  const auto heads = generator_.forward(tape, r);
  return {heads.treated.value().storage(), heads.control.value().storage()};
}

ObjectiveTerms build_objective(Tape& tape, GialModel& model, const ObjectiveInputs& in,
                               const ObjectiveOptions& options) {
  if (in.features == nullptr || in.corrupted == nullptr || in.graph == nullptr) {
    throw ContractViolation("build_objective: features, corrupted features and graph are required");
  }
  const std::size_t n = in.features->rows();
  if (in.treatment.size() != n || in.factual.size() != n || in.corrupted->rows() != n) {
    throw DimensionError("build_objective: inconsistent unit counts");
  }
  ObjectiveTerms terms;

  // Positive and corrupted representations, summary, bilinear probe.
  terms.representations = model.encoder().forward(tape, tape.constant(*in.features), *in.graph);
  Var negative = model.encoder().forward(tape, tape.constant(*in.corrupted), *in.graph);
  Var summary = summary_readout(terms.representations);
  Var w = tape.param(model.mi().scoring());
  terms.positive_scores = mi_scores(terms.representations, summary, w);
  terms.negative_scores = mi_scores(negative, summary, w);
  terms.mi = mi_loss(terms.positive_scores, terms.negative_scores);

  // Potential outcomes and the factual regression loss.
  const auto outcomes = generate_outcomes(tape, terms.representations, in.treatment, model.generator());
  Matrix observed = Matrix::column(in.factual);
  Var observed_all = tape.constant(observed);
  terms.factual = in.supervised.empty()
                      ? tape.constant(Matrix(1, 1))
                      : factual_loss(gather_rows(outcomes.factual, in.supervised),
                                     gather_rows(observed_all, in.supervised));

  // Counterfactual discriminator on the balanced batch.
  if (in.balanced.empty()) {
    terms.adversarial = {tape.constant(Matrix(1, 1)), 0};
    return terms;
  }
  std::vector<int> batch_t;
  batch_t.reserve(in.balanced.size());
  for (std::size_t i : in.balanced) batch_t.push_back(in.treatment[i]);
  Var disc_r = gather_rows(terms.representations, in.balanced);
  if (options.detach_discriminator_input) disc_r = detach(disc_r);
  const auto out = discriminator_probs(tape, disc_r, batch_t, gather_rows(observed_all, in.balanced),
                                       gather_rows(outcomes.counterfactual, in.balanced), model.discriminator());
  terms.adversarial = adversarial_loss(out, options.enforce_balance);
  return terms;
}

Var joint_objective(const ObjectiveTerms& terms, double alpha, double beta) {
  return terms.factual + scale(terms.mi.value, alpha) - scale(terms.adversarial.value, beta);
}

}  // namespace gial
