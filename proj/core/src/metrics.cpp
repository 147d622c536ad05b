#include "gial/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "gial/error.hpp"
#include "gial/infomax.hpp"

namespace gial {

using nlohmann::json;

namespace {

void require_paired(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw ContractViolation(std::string(what) + ": length mismatch");
  if (a.empty()) throw ContractViolation(std::string(what) + ": empty input");
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json census_json(const EdgeCensus& c) {
  const auto observed = c.observed_ratio();
  const auto expected = c.expected_ratio();
  return {{"nodes", c.node_count},
          {"edges", c.total()},
          {"homogeneous", c.homogeneous},
          {"heterogeneous", c.heterogeneous},
          {"expected_homogeneous", c.expected_homogeneous},
          {"expected_heterogeneous", c.expected_heterogeneous},
          {"observed_ratio", observed ? json(*observed) : json(nullptr)},
          {"expected_ratio", expected ? json(*expected) : json(nullptr)}};
}

}  // namespace

double eps_ate(std::span<const double> true_ite, std::span<const double> est_ite) {
  require_paired(true_ite, est_ite, "eps_ate");
  double diff = 0.0;
  for (std::size_t i = 0; i < true_ite.size(); ++i) diff += true_ite[i] - est_ite[i];
  return std::abs(diff / static_cast<double>(true_ite.size()));
}

double sqrt_pehe(std::span<const double> true_ite, std::span<const double> est_ite) {
  require_paired(true_ite, est_ite, "sqrt_pehe");
  return std::sqrt(mean_squared_error(true_ite, est_ite));
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  require_paired(a, b, "mean_squared_error");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

std::string to_json(const MetricsReport& r) {
  const json j = {{"variant", r.variant},
                  {"sqrt_pehe", number_or_null(r.sqrt_pehe)},
                  {"eps_ate", number_or_null(r.eps_ate)},
                  {"factual_mse", {{"train", r.factual_mse_train},
                                   {"validation", r.factual_mse_validation},
                                   {"test", r.factual_mse_test}}},
                  {"edge_census", census_json(r.census)},
                  {"config_fingerprint", r.config_fingerprint},
                  {"seed", r.seed},
                  {"alpha", r.alpha},
                  {"beta", r.beta},
                  {"epochs_run", r.epochs_run},
                  {"best_epoch", r.best_epoch},
                  {"log_clamp", kLogClamp},
                  {"runtime_seconds", r.runtime_seconds}};
  return j.dump(2);
}

MetricsReport metrics_report_from_json(const std::string& text) {
  MetricsReport r;
  try {
    const json j = json::parse(text);
    r.variant = j.at("variant").get<std::string>();
    r.sqrt_pehe = number_from(j.at("sqrt_pehe"));
    r.eps_ate = number_from(j.at("eps_ate"));
    const json& mse = j.at("factual_mse");
    r.factual_mse_train = mse.at("train").get<double>();
    r.factual_mse_validation = mse.at("validation").get<double>();
    r.factual_mse_test = mse.at("test").get<double>();
    const json& c = j.at("edge_census");
    r.census.node_count = c.at("nodes").get<std::size_t>();
    r.census.homogeneous = c.at("homogeneous").get<std::size_t>();
    r.census.heterogeneous = c.at("heterogeneous").get<std::size_t>();
    r.census.expected_homogeneous = c.at("expected_homogeneous").get<double>();
    r.census.expected_heterogeneous = c.at("expected_heterogeneous").get<double>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.alpha = j.at("alpha").get<double>();
    r.beta = j.at("beta").get<double>();
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.runtime_seconds = j.at("runtime_seconds").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string census_to_json(const EdgeCensus& census) { return census_json(census).dump(2); }

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gial
