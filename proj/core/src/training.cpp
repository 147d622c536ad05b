#include "gial/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gial/error.hpp"
#include "gial/format.hpp"
#include "gial/optim.hpp"

namespace gial {

using nlohmann::json;

namespace {

template <typename T, std::size_t N>
bool in_grid(const std::array<T, N>& grid, T v) {
  return std::find(grid.begin(), grid.end(), v) != grid.end();
}

}  // namespace

void TrainConfig::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0 || !std::isfinite(beta) || beta < 0.0) {
    throw ContractViolation("TrainConfig: alpha and beta must be finite and >= 0");
  }
  if (representation_dim == 0) throw ContractViolation("TrainConfig: representation_dim must be positive");
  if (encoder_layers == 0 || attention_heads == 0 || generator_layers == 0) {
    throw ContractViolation("TrainConfig: layer and head counts must be positive");
  }
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) throw ContractViolation("TrainConfig: learning_rate must be >= 0");
  if (!std::isfinite(l2_weight) || l2_weight < 0.0) throw ContractViolation("TrainConfig: l2_weight must be >= 0");
  if (patience == 0) throw ContractViolation("TrainConfig: patience must be >= 1");
  if (max_epochs == 0) throw ContractViolation("TrainConfig: max_epochs must be >= 1");
  if (discriminator_steps == 0) throw ContractViolation("TrainConfig: discriminator_steps must be >= 1");
  if (strict_grid) {
    if (!in_grid(kTradeoffGrid, alpha) || !in_grid(kTradeoffGrid, beta)) {
      throw ContractViolation("TrainConfig: alpha/beta outside {0, 1e-4, 1e-3, 1e-2, 1e-1}");
    }
    if (!in_grid(kRepresentationDimGrid, representation_dim)) {
      throw ContractViolation("TrainConfig: representation_dim outside {50, 100, 150, 200}");
    }
    if (!in_grid(kEncoderLayerGrid, encoder_layers)) throw ContractViolation("TrainConfig: encoder_layers outside {1, 2, 3}");
    if (encoder == EncoderKind::gat && !in_grid(kHeadGrid, attention_heads)) {
      throw ContractViolation("TrainConfig: attention_heads outside {1, 2, 3, 4}");
    }
    if (!in_grid(kGeneratorLayerGrid, generator_layers)) {
      throw ContractViolation("TrainConfig: generator_layers outside {1, 2, 3, 4}");
    }
  }
}

ModelConfig TrainConfig::model_config(std::size_t input_dim) const {
  ModelConfig m;
  m.encoder = {encoder, input_dim, representation_dim, encoder_layers, attention_heads};
  m.generator_layers = generator_layers;
  m.shared_trunk_layers = shared_trunk_layers;
  m.discriminator_layers = discriminator_layers;
  return m;
}

std::string to_string(EncoderRole role) { return role == EncoderRole::shared ? "shared" : "max_only"; }

std::string to_string(SelectionCriterion s) {
  switch (s) {
    case SelectionCriterion::factual_mse: return "factual_mse";
    case SelectionCriterion::oracle_pehe: return "oracle_pehe";
    case SelectionCriterion::final_epoch: return "final_epoch";
  }
  return "factual_mse";
}

std::string to_json(const TrainConfig& c) {
  const json j = {{"alpha", c.alpha},
                  {"beta", c.beta},
                  {"encoder", to_string(c.encoder)},
                  {"representation_dim", c.representation_dim},
                  {"encoder_layers", c.encoder_layers},
                  {"attention_heads", c.attention_heads},
                  {"generator_layers", c.generator_layers},
                  {"shared_trunk_layers", c.shared_trunk_layers},
                  {"discriminator_layers", c.discriminator_layers},
                  {"learning_rate", c.learning_rate},
                  {"l2_weight", c.l2_weight},
                  {"patience", c.patience},
                  {"max_epochs", c.max_epochs},
                  {"seed", c.seed},
                  {"discriminator_steps", c.discriminator_steps},
                  {"encoder_role", to_string(c.encoder_role)},
                  {"selection", to_string(c.selection)},
                  {"use_factual_loss", c.use_factual_loss},
                  {"strict_grid", c.strict_grid}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base) {
  TrainConfig c = base;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw DataError("training config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "beta") c.beta = v.get<double>();
      else if (key == "encoder") c.encoder = encoder_kind_from_string(v.get<std::string>());
      else if (key == "representation_dim") c.representation_dim = v.get<std::size_t>();
      else if (key == "encoder_layers") c.encoder_layers = v.get<std::size_t>();
      else if (key == "attention_heads") c.attention_heads = v.get<std::size_t>();
      else if (key == "generator_layers") c.generator_layers = v.get<std::size_t>();
      else if (key == "shared_trunk_layers") c.shared_trunk_layers = v.get<std::size_t>();
      else if (key == "discriminator_layers") c.discriminator_layers = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "l2_weight") c.l2_weight = v.get<double>();
      else if (key == "patience") c.patience = v.get<std::size_t>();
      else if (key == "max_epochs") c.max_epochs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "discriminator_steps") c.discriminator_steps = v.get<std::size_t>();
      else if (key == "encoder_role") {
        const auto s = v.get<std::string>();
        if (s == "shared") c.encoder_role = EncoderRole::shared;
        else if (s == "max_only") c.encoder_role = EncoderRole::max_only;
        else throw DataError("encoder_role must be 'shared' or 'max_only'");
      } else if (key == "selection") {
        const auto s = v.get<std::string>();
        if (s == "factual_mse") c.selection = SelectionCriterion::factual_mse;
        else if (s == "oracle_pehe") c.selection = SelectionCriterion::oracle_pehe;
        else if (s == "final_epoch") c.selection = SelectionCriterion::final_epoch;
        else throw DataError("selection must be 'factual_mse', 'oracle_pehe' or 'final_epoch'");
      } else if (key == "use_factual_loss") c.use_factual_loss = v.get<bool>();
      else if (key == "strict_grid") c.strict_grid = v.get<bool>();
      else throw DataError("unknown training config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("training config: ") + e.what());
  } catch (const ContractViolation& e) {
    throw DataError(std::string("training config: ") + e.what());
  }
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open training config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return train_config_from_json(ss.str());
}

std::string TrainTrace::to_csv() const {
  std::string out = "epoch,factual_loss,mi_loss,adversarial_loss,validation,saturated_logs\n";
  for (const EpochRecord& r : epochs) {
    out += std::to_string(r.epoch) + ',' + format_double(r.factual_loss) + ',' + format_double(r.mi_loss) + ',' +
           format_double(r.adversarial_loss) + ',' + format_double(r.validation) + ',' +
           std::to_string(r.saturated_logs) + '\n';
  }
  return out;
}

namespace {

void zero_all(GialModel& model) {
  for (Parameter* p : model.parameters()) p->zero_grad();
}

void append(std::vector<Parameter*>& to, const std::vector<Parameter*>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

void require_finite(double v, const char* term, std::size_t epoch) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(term) + " is not finite at epoch " + std::to_string(epoch));
  }
}

/// Equal numbers of treated and control training units; the majority group is
/// subsampled. Both groups are reshuffled every call so the rng stream does
/// not depend on which group is larger.
std::vector<std::size_t> balanced_batch(std::vector<std::size_t> treated, std::vector<std::size_t> control, Rng& rng) {
  shuffle(treated, rng);
  shuffle(control, rng);
  const std::size_t m = std::min(treated.size(), control.size());
  std::vector<std::size_t> out(treated.begin(), treated.begin() + static_cast<std::ptrdiff_t>(m));
  out.insert(out.end(), control.begin(), control.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(out.begin(), out.end());
  return out;
}

double selection_value(const PotentialOutcomes& pred, const Dataset& data, const std::vector<std::size_t>& idx,
                       SelectionCriterion criterion) {
  std::vector<double> a, b;
  a.reserve(idx.size());
  b.reserve(idx.size());
  if (criterion != SelectionCriterion::oracle_pehe) {
    for (std::size_t i : idx) {
      a.push_back(data.treatment[i] == 1 ? pred.treated[i] : pred.control[i]);
      b.push_back(data.factual[i]);
    }
    return mean_squared_error(a, b);
  }
  for (std::size_t i : idx) {
    a.push_back(data.mu1[i] - data.mu0[i]);
    b.push_back(pred.treated[i] - pred.control[i]);
  }
  return sqrt_pehe(a, b);
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config) {
  return train(data, split_indices(data.size(), kDefaultSplit, config.seed), config);
}

TrainResult train(const Dataset& data, const Split& split, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.size();
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= n) throw ContractViolation("train: split index " + std::to_string(i) + " out of range");
    }
  }
  if (split.train.empty() || split.validation.empty()) {
    throw ContractViolation("train: training and validation splits must be non-empty");
  }
  if (cfg.selection == SelectionCriterion::oracle_pehe && !data.has_ground_truth()) {
    throw ContractViolation("train: oracle_pehe selection needs ground-truth outcomes");
  }

  TrainResult result;
  result.split = split;
  result.graph = make_graph_context(data.graph);
  result.model = std::make_unique<GialModel>(cfg.model_config(data.features.cols()), cfg.seed);
  GialModel& model = *result.model;

  Adam adam({cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.l2_weight});
  Rng corrupt_rng = derive_rng(cfg.seed, 101);
  Rng batch_rng = derive_rng(cfg.seed, 102);

  std::vector<std::size_t> treated, control;
  for (std::size_t i : split.train) (data.treatment[i] == 1 ? treated : control).push_back(i);

  const bool shared = cfg.encoder_role == EncoderRole::shared;
  const bool use_mi = cfg.alpha > 0.0;
  const bool use_adv = cfg.beta > 0.0;

  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params = model.snapshot();
  TrainTrace& trace = result.trace;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const CorruptedBatch corrupted = corrupt(data.features, corrupt_rng);
    const std::vector<std::size_t> balanced = balanced_batch(treated, control, batch_rng);
    const bool adv_active = use_adv && !balanced.empty();

    ObjectiveInputs in;
    in.features = &data.features;
    in.corrupted = &corrupted.features;
    in.graph = &result.graph;
    in.treatment = data.treatment;
    in.factual = data.factual;
    in.supervised = split.train;
    in.balanced = balanced;

    EpochRecord rec;
    rec.epoch = epoch;

    // Maximizer: Φ descends β L_{Φ,Ψ}; the MI side ascends α L_m.
    for (std::size_t step = 0; step < cfg.discriminator_steps; ++step) {
      zero_all(model);
      Tape tape;
      const ObjectiveTerms terms = build_objective(tape, model, in, {shared, true});
      rec.mi_loss = terms.mi.value.item();
      rec.adversarial_loss = terms.adversarial.value.item();
      rec.saturated_logs = terms.mi.saturated + terms.adversarial.saturated;
      require_finite(rec.mi_loss, "mutual information loss L_m", epoch);
      require_finite(rec.adversarial_loss, "discriminator loss L_{Phi,Psi}", epoch);

      std::vector<Parameter*> params;
      if (use_mi) append(params, model.mi_parameters());
      if (adv_active) append(params, model.discriminator_parameters());
      if ((shared && use_mi) || (!shared && (use_mi || adv_active))) append(params, model.encoder_parameters());
      if (params.empty()) break;
      Var loss = scale(terms.mi.value, -cfg.alpha) + scale(terms.adversarial.value, cfg.beta);
      tape.backward(loss);
      adam.step(params);
    }

    // Minimizer: Ψ (and the shared encoder) descend L_Ψ − β L_{Φ,Ψ}.
    {
      zero_all(model);
      Tape tape;
      const ObjectiveTerms terms = build_objective(tape, model, in, {false, true});
      rec.factual_loss = terms.factual.item();
      require_finite(rec.factual_loss, "factual loss L_Psi", epoch);
      require_finite(terms.adversarial.value.item(), "discriminator loss L_{Phi,Psi}", epoch);
      if (cfg.use_factual_loss || adv_active) {
        Var loss = scale(terms.adversarial.value, -cfg.beta);
        if (cfg.use_factual_loss) loss = terms.factual + loss;
        tape.backward(loss);
        std::vector<Parameter*> params = model.generator_parameters();
        if (shared) append(params, model.encoder_parameters());
        adam.step(params);
      }
    }

    const PotentialOutcomes pred = model.predict(data.features, result.graph);
    rec.validation = selection_value(pred, data, split.validation, cfg.selection);
    require_finite(rec.validation, "validation criterion", epoch);
    trace.epochs.push_back(rec);

    if (rec.validation < best || cfg.selection == SelectionCriterion::final_epoch) {
      best = rec.validation;
      trace.best_epoch = epoch;
      trace.best_validation = best;
      best_params = model.snapshot();
    } else if (epoch - trace.best_epoch >= cfg.patience) {
      break;
    }
  }
  model.restore(best_params);
  return result;
}

MetricsReport evaluate(TrainResult& result, const Dataset& data, const TrainConfig& config,
                       const std::string& variant) {
  MetricsReport r;
  r.variant = variant;
  const PotentialOutcomes pred = result.model->predict(data.features, result.graph);
  auto factual_mse = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    return selection_value(pred, data, idx, SelectionCriterion::factual_mse);
  };
  r.factual_mse_train = factual_mse(result.split.train);
  r.factual_mse_validation = factual_mse(result.split.validation);
  r.factual_mse_test = factual_mse(result.split.test);
  if (data.has_ground_truth() && !result.split.test.empty()) {
    std::vector<double> truth, est;
    for (std::size_t i : result.split.test) {
      truth.push_back(data.mu1[i] - data.mu0[i]);
      est.push_back(pred.treated[i] - pred.control[i]);
    }
    r.sqrt_pehe = sqrt_pehe(truth, est);
    r.eps_ate = eps_ate(truth, est);
  } else {
    r.sqrt_pehe = std::numeric_limits<double>::quiet_NaN();
    r.eps_ate = std::numeric_limits<double>::quiet_NaN();
  }
  r.census = edge_census(data.graph, data.treatment);
  r.config_fingerprint = fingerprint(to_json(config));
  r.seed = config.seed;
  r.alpha = config.alpha;
  r.beta = config.beta;
  r.epochs_run = result.trace.epochs.size();
  r.best_epoch = result.trace.best_epoch;
  return r;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_smi: return "no_smi";
    case Variant::no_cd: return "no_cd";
  }
  return "full";
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "no_smi") return Variant::no_smi;
  if (s == "no_cd") return Variant::no_cd;
  throw ContractViolation("unknown variant '" + s + "' (expected full, no_smi or no_cd)");
}

TrainConfig apply_variant(TrainConfig config, Variant v) {
  if (v == Variant::no_smi) config.alpha = 0.0;
  if (v == Variant::no_cd) config.beta = 0.0;
  return config;
}

MetricsReport ablate(const Dataset& data, const TrainConfig& config, Variant variant) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig cfg = apply_variant(config, variant);
  TrainResult result = train(data, cfg);
  MetricsReport report = evaluate(result, data, cfg, to_string(variant));
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<SweepPoint> sensitivity_sweep(const Dataset& data, const TrainConfig& base,
                                          std::span<const double> alphas, std::span<const double> betas,
                                          std::size_t jobs) {
  std::vector<SweepPoint> points;
  for (double a : alphas)
    for (double b : betas) points.push_back({a, b, {}});
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        TrainConfig cfg = base;
        cfg.alpha = points[i].alpha;
        cfg.beta = points[i].beta;
        const auto start = std::chrono::steady_clock::now();
        TrainResult result = train(data, cfg);
        points[i].report = evaluate(result, data, cfg, "sweep");
        points[i].report.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, points.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return points;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
  std::string out = "alpha,beta,sqrt_pehe,eps_ate,factual_mse_test,best_epoch\n";
  for (const SweepPoint& p : points) {
    out += format_double(p.alpha) + ',' + format_double(p.beta) + ',' + format_double(p.report.sqrt_pehe) + ',' +
           format_double(p.report.eps_ate) + ',' + format_double(p.report.factual_mse_test) + ',' +
           std::to_string(p.report.best_epoch) + '\n';
  }
  return out;
}

MiDiagnostics mi_diagnostics(GialModel& model, const Matrix& features, const GraphContext& graph,
                             const std::vector<std::size_t>& permutation) {
  const CorruptedBatch corrupted = corrupt_with(features, permutation);
  Tape tape;
  Var r = model.encoder().forward(tape, tape.constant(features), graph);
  Var neg = model.encoder().forward(tape, tape.constant(corrupted.features), graph);
  Var s = summary_readout(r);
  Var w = tape.param(model.mi().scoring());
  MiDiagnostics d;
  d.positive_mean = mean(mi_scores(r, s, w)).item();
  d.negative_mean = mean(mi_scores(neg, s, w)).item();
  return d;
}

}  // namespace gial
