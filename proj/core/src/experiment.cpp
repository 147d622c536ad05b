#include "gial/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gial/error.hpp"
#include "gial/format.hpp"

namespace gial {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MetricsReport run_experiment(const Dataset& data, const TrainConfig& config, const fs::path& out_dir, Variant variant,
                             const std::string& suffix) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig cfg = apply_variant(config, variant);
  TrainResult result = train(data, cfg);
  MetricsReport report = evaluate(result, data, cfg, to_string(variant));
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text_file(out_dir / ("report" + suffix + ".json"), to_json(report) + "\n");
  write_text_file(out_dir / ("trace" + suffix + ".csv"), result.trace.to_csv());
  return report;
}

std::vector<MetricsReport> run_ablation(const Dataset& data, const TrainConfig& config, const fs::path& out_dir,
                                        std::span<const Variant> variants) {
  std::vector<MetricsReport> reports;
  std::string table = "variant,sqrt_pehe,eps_ate,factual_mse_test\n";
  for (Variant v : variants) {
    reports.push_back(run_experiment(data, config, out_dir, v, "_" + to_string(v)));
    const MetricsReport& r = reports.back();
    table += r.variant + ',' + format_double(r.sqrt_pehe) + ',' + format_double(r.eps_ate) + ',' +
             format_double(r.factual_mse_test) + '\n';
  }
  write_text_file(out_dir / "ablation.csv", table);
  return reports;
}

std::vector<SweepPoint> run_sweep(const Dataset& data, const TrainConfig& config, std::span<const double> alphas,
                                  std::span<const double> betas, std::size_t jobs, const fs::path& out_dir) {
  std::vector<SweepPoint> points = sensitivity_sweep(data, config, alphas, betas, jobs);
  write_text_file(out_dir / "sweep.csv", sweep_to_csv(points));
  json all = json::array();
  for (const SweepPoint& p : points) all.push_back(json::parse(to_json(p.report)));
  write_text_file(out_dir / "sweep.json", all.dump(2) + "\n");
  return points;
}

fs::path generate_to_dir(const GenConfig& config, const fs::path& out_dir, std::vector<std::string>* warnings) {
  GenerationResult result = generate(config);
  const fs::path manifest = save_dataset(result.data, out_dir);
  write_text_file(out_dir / "gen_config.json", to_json(config) + "\n");
  if (warnings != nullptr) *warnings = std::move(result.warnings);
  return manifest;
}

std::vector<int> read_treatment(std::istream& in) {
  std::vector<int> t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::string field = line.substr(first, line.find(',', first) - first);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.pop_back();
    double v = 0.0;
    if (!parse_double(field, v)) throw DataError("treatment value '" + field + "' is not a number", line_no);
    if (v != 0.0 && v != 1.0) throw DataError("treatment must be 0 or 1, got '" + field + "'", line_no);
    t.push_back(v == 1.0 ? 1 : 0);
  }
  return t;
}

std::vector<int> read_treatment_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open treatment file '" + path.string() + "'");
  try {
    return read_treatment(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

EdgeCensus analyze_files(const fs::path& edges, const fs::path& treatment) {
  const std::vector<int> t = read_treatment_file(treatment);
  std::ifstream in(edges);
  if (!in) throw DataError("cannot open edge list '" + edges.string() + "'");
  Graph g = [&] {
    try {
      return read_edge_list(in, t.size());
    } catch (const DataError& e) {
      throw DataError(edges.string() + ": " + e.what());
    }
  }();
  return edge_census(g, t);
}

std::string census_to_csv(const EdgeCensus& c) {
  const auto observed = c.observed_ratio();
  const auto expected = c.expected_ratio();
  return "nodes,edges,homogeneous,heterogeneous,expected_homogeneous,expected_heterogeneous,observed_ratio,"
         "expected_ratio\n" +
         std::to_string(c.node_count) + ',' + std::to_string(c.total()) + ',' + std::to_string(c.homogeneous) + ',' +
         std::to_string(c.heterogeneous) + ',' + format_double(c.expected_homogeneous) + ',' +
         format_double(c.expected_heterogeneous) + ',' + (observed ? format_double(*observed) : "") + ',' +
         (expected ? format_double(*expected) : "") + '\n';
}

}  // namespace gial
