#include "gial/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gial/error.hpp"
#include "gial/random.hpp"

namespace gial {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kCoefficients = 1, kLatent, kFeatures, kEdges, kTreatment, kNoise };

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

}  // namespace

void GenConfig::validate() const {
  if (nodes < 2) throw ContractViolation("GenConfig: nodes must be >= 2");
  if (topic_dim == 0 || feature_dim == 0) throw ContractViolation("GenConfig: topic_dim and feature_dim must be positive");
  if (!(homophily >= 0.0) || !(bias >= 0.0)) throw ContractViolation("GenConfig: homophily and bias must be >= 0");
  if (!(avg_degree >= 0.0)) throw ContractViolation("GenConfig: avg_degree must be >= 0");
  if (!(outcome_noise >= 0.0) || !(feature_noise >= 0.0) || !(topic_spread >= 0.0)) {
    throw ContractViolation("GenConfig: noise levels must be >= 0");
  }
  if (!(feature_density > 0.0 && feature_density <= 1.0)) {
    throw ContractViolation("GenConfig: feature_density must be in (0, 1]");
  }
  if (!std::isfinite(outcome_scale) || !std::isfinite(effect_offset)) {
    throw ContractViolation("GenConfig: outcome_scale and effect_offset must be finite");
  }
}

GenerationResult generate(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.nodes, k = cfg.topic_dim, f = cfg.feature_dim;
  GenerationResult result;
  Dataset& d = result.data;

  Rng coef = derive_rng(cfg.seed, kCoefficients);
  Matrix projection(k, f);
  for (double& v : projection.values()) v = uniform01(coef) < cfg.feature_density ? uniform(coef, 0.5, 1.5) : 0.0;
  std::vector<double> v0(k), v1(k);
  for (double& v : v0) v = normal(coef);
  for (double& v : v1) v = normal(coef);

  // (1) hidden confounders
  Rng zr = derive_rng(cfg.seed, kLatent);
  d.latent = Matrix(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t topic = uniform_index(zr, k);
    for (std::size_t j = 0; j < k; ++j) d.latent(i, j) = (j == topic ? 1.0 : 0.0) + cfg.topic_spread * normal(zr);
  }

  // (2) observed features: sparse nonnegative noisy projection
  Rng xr = derive_rng(cfg.seed, kFeatures);
  d.features = matmul(d.latent, projection);
  for (double& v : d.features.values()) {
    v += cfg.feature_noise * normal(xr);
    v = v < 0.1 ? 0.0 : v;
  }

  // (3) homophilous edges
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = std::sqrt(dot(d.latent.row_span(i), d.latent.row_span(i)));
  auto affinity = [&](std::size_t i, std::size_t j) {
    const double denom = norms[i] * norms[j];
    const double cos = denom > 0.0 ? dot(d.latent.row_span(i), d.latent.row_span(j)) / denom : 0.0;
    return std::exp(cfg.homophily * cos);
  };
  double total_affinity = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) total_affinity += affinity(i, j);
  const double target_edges = cfg.avg_degree * static_cast<double>(n) / 2.0;
  const double c = total_affinity > 0.0 ? target_edges / total_affinity : 0.0;
  Rng er = derive_rng(cfg.seed, kEdges);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = std::min(1.0, c * affinity(i, j));
      if (uniform01(er) < p) edges.push_back({i, j, 1.0});
    }
  }
  d.graph = Graph(n, edges);
  if (d.graph.edge_count() == 0) result.warnings.push_back("generated graph has no edges");

  // Node aggregate: half own z, half mean of neighbors' z (own z when isolated).
  Matrix agg(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = d.graph.neighbors(i);
    for (std::size_t j = 0; j < k; ++j) {
      double m = d.latent(i, j);
      if (!nb.empty()) {
        m = 0.0;
        for (std::size_t u : nb) m += d.latent(u, j);
        m /= static_cast<double>(nb.size());
      }
      agg(i, j) = 0.5 * d.latent(i, j) + 0.5 * m;
    }
  }

  // (4) confounded treatment: units with a larger effect direction are favored
  std::vector<double> w(k);
  double wn = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    w[j] = v1[j] - v0[j];
    wn += w[j] * w[j];
  }
  wn = std::sqrt(wn);
  for (double& v : w) v = wn > 0.0 ? v / wn : 0.0;
  std::vector<double> score(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = dot(agg.row_span(i), w);
    mean += score[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : score) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  Rng tr = derive_rng(cfg.seed, kTreatment);
  result.propensity.resize(n);
  d.treatment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double standardized = sd > 0.0 ? (score[i] - mean) / sd : 0.0;
    result.propensity[i] = sigmoid(cfg.bias * standardized);
    d.treatment[i] = uniform01(tr) < result.propensity[i] ? 1 : 0;
  }

  // (5) potential outcomes and noisy factual outcome
  Rng nr = derive_rng(cfg.seed, kNoise);
  d.mu0.resize(n);
  d.mu1.resize(n);
  d.factual.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.mu0[i] = cfg.outcome_scale * dot(agg.row_span(i), v0);
    d.mu1[i] = cfg.outcome_scale * dot(agg.row_span(i), v1) + cfg.effect_offset;
    const double noise = cfg.outcome_noise * normal(nr);
    d.factual[i] = (d.treatment[i] == 1 ? d.mu1[i] : d.mu0[i]) + noise;
  }
  return result;
}

GenConfig gen_config_from_json(const std::string& text) {
  GenConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw DataError("generator config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "nodes") c.nodes = value.get<std::size_t>();
      else if (key == "topic_dim") c.topic_dim = value.get<std::size_t>();
      else if (key == "feature_dim") c.feature_dim = value.get<std::size_t>();
      else if (key == "homophily") c.homophily = value.get<double>();
      else if (key == "bias") c.bias = value.get<double>();
      else if (key == "avg_degree") c.avg_degree = value.get<double>();
      else if (key == "outcome_noise") c.outcome_noise = value.get<double>();
      else if (key == "feature_noise") c.feature_noise = value.get<double>();
      else if (key == "feature_density") c.feature_density = value.get<double>();
      else if (key == "topic_spread") c.topic_spread = value.get<double>();
      else if (key == "outcome_scale") c.outcome_scale = value.get<double>();
      else if (key == "effect_offset") c.effect_offset = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw DataError("unknown generator config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("generator config: ") + e.what());
  }
  return c;
}

std::string to_json(const GenConfig& c) {
  const json j = {{"nodes", c.nodes},
                  {"topic_dim", c.topic_dim},
                  {"feature_dim", c.feature_dim},
                  {"homophily", c.homophily},
                  {"bias", c.bias},
                  {"avg_degree", c.avg_degree},
                  {"outcome_noise", c.outcome_noise},
                  {"feature_noise", c.feature_noise},
                  {"feature_density", c.feature_density},
                  {"topic_spread", c.topic_spread},
                  {"outcome_scale", c.outcome_scale},
                  {"effect_offset", c.effect_offset},
                  {"seed", c.seed}};
  return j.dump(2);
}

GenConfig load_gen_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generator config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return gen_config_from_json(ss.str());
}

}  // namespace gial
