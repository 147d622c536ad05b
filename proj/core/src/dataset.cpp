#include "gial/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gial/error.hpp"
#include "gial/format.hpp"
#include "gial/random.hpp"

namespace gial {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> Dataset::true_ite() const {
  if (!has_ground_truth()) throw ContractViolation("dataset has no ground-truth potential outcomes");
  std::vector<double> out(mu0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu1[i] - mu0[i];
  return out;
}

void Dataset::validate() const {
  const std::size_t n = treatment.size();
  if (features.rows() != n) {
    throw DataError("features have " + std::to_string(features.rows()) + " rows for " + std::to_string(n) + " units");
  }
  if (graph.node_count() != n) {
    throw DataError("graph has " + std::to_string(graph.node_count()) + " nodes for " + std::to_string(n) + " units");
  }
  if (factual.size() != n) throw DataError("factual outcome length mismatch");
  if (mu0.size() != mu1.size() || (!mu0.empty() && mu0.size() != n)) {
    throw DataError("ground-truth outcome length mismatch");
  }
  if (!latent.empty() && latent.rows() != n) throw DataError("latent confounder row count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i] != 0 && treatment[i] != 1) {
      throw DataError("treatment of unit " + std::to_string(i) + " is not 0 or 1");
    }
    if (!std::isfinite(factual[i])) throw DataError("non-finite factual outcome at unit " + std::to_string(i));
  }
  if (!features.all_finite()) throw DataError("non-finite feature value");
}

Split split_indices(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ContractViolation("split: negative fraction");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("split: fractions must sum to 1");
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw ContractViolation("split: " + std::to_string(n) + " units cannot populate all three splits");
  }
  Rng rng = derive_rng(seed, 0x5eed);
  const auto perm = random_permutation(n, rng);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                      perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  for (auto* part : {&s.train, &s.validation, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

namespace {

void write_features(std::ostream& out, const Matrix& x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    bool first = true;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x(i, j) == 0.0) continue;
      if (!first) out << ' ';
      out << j << ':' << format_double(x(i, j));
      first = false;
    }
    out << '\n';
  }
}

Matrix read_features(const fs::path& path, std::size_t n, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open features file '" + path.string() + "'");
  Matrix x(n, dim);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (row >= n) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw DataError("more feature rows than nodes", row + 1);
    }
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      const auto colon = tok.find(':');
      double value = 0.0;
      std::size_t col = 0;
      bool ok = colon != std::string::npos && colon > 0;
      if (ok) {
        try {
          std::size_t pos = 0;
          col = std::stoul(tok.substr(0, colon), &pos);
          ok = pos == colon && tok[0] != '-';
        } catch (const std::exception&) {
          ok = false;
        }
      }
      ok = ok && parse_double(std::string_view(tok).substr(colon + 1), value) && std::isfinite(value);
      if (!ok) throw DataError("malformed feature pair '" + tok + "'", row + 1);
      if (col >= dim) throw DataError("feature index " + std::to_string(col) + " >= feature_dim", row + 1);
      x(row, col) = value;
    }
    ++row;
  }
  if (row != n) throw DataError("features file has " + std::to_string(row) + " rows, expected " + std::to_string(n));
  return x;
}

std::vector<std::vector<double>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string_view field =
          std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      if (!parse_double(field, v)) {
        throw DataError("'" + path.filename().string() + "': bad number '" + std::string(field) + "'", line_no);
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("'" + path.filename().string() + "': inconsistent column count", line_no);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

fs::path save_dataset(const Dataset& data, const fs::path& dir) {
  data.validate();
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "features.txt");
    write_features(out, data.features);
  }
  {
    std::ofstream out(dir / "edges.tsv");
    write_edge_list(out, data.graph);
  }
  {
    std::ofstream out(dir / "arrays.csv");
    for (std::size_t i = 0; i < data.size(); ++i) {
      out << data.treatment[i] << ',' << format_double(data.factual[i]);
      if (data.has_ground_truth()) out << ',' << format_double(data.mu0[i]) << ',' << format_double(data.mu1[i]);
      out << '\n';
    }
  }
  json manifest = {{"nodes", data.size()},
                   {"feature_dim", data.features.cols()},
                   {"features", "features.txt"},
                   {"edges", "edges.tsv"},
                   {"arrays", "arrays.csv"}};
  if (!data.latent.empty()) {
    std::ofstream out(dir / "latent.csv");
    for (std::size_t i = 0; i < data.latent.rows(); ++i) {
      for (std::size_t j = 0; j < data.latent.cols(); ++j) {
        if (j) out << ',';
        out << format_double(data.latent(i, j));
      }
      out << '\n';
    }
    manifest["latent"] = "latent.csv";
  }
  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream(manifest_path) << manifest.dump(2) << '\n';
  return manifest_path;
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("manifest '" + manifest_path.string() + "': " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  Dataset d;
  try {
    const auto n = m.at("nodes").get<std::size_t>();
    const auto dim = m.at("feature_dim").get<std::size_t>();
    d.features = read_features(base / m.at("features").get<std::string>(), n, dim);
    d.graph = read_edge_list_file((base / m.at("edges").get<std::string>()).string(), n);
    const auto rows = read_csv_rows(base / m.at("arrays").get<std::string>());
    if (rows.size() != n) throw DataError("arrays file has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(n));
    if (!rows.empty() && rows.front().size() != 2 && rows.front().size() != 4) {
      throw DataError("arrays file must have 2 (t,y_f) or 4 (t,y_f,mu0,mu1) columns");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double t = rows[i][0];
      if (t != 0.0 && t != 1.0) throw DataError("treatment must be 0 or 1", i + 1);
      d.treatment.push_back(static_cast<int>(t));
      d.factual.push_back(rows[i][1]);
      if (rows[i].size() == 4) {
        d.mu0.push_back(rows[i][2]);
        d.mu1.push_back(rows[i][3]);
      }
    }
    if (m.contains("latent")) {
      const auto lrows = read_csv_rows(base / m.at("latent").get<std::string>());
      if (lrows.size() != n) throw DataError("latent file row count mismatch");
      d.latent = Matrix(n, lrows.empty() ? 0 : lrows.front().size());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d.latent.cols(); ++j) d.latent(i, j) = lrows[i][j];
    }
  } catch (const json::exception& e) {
    throw DataError("manifest '" + manifest_path.string() + "': " + e.what());
  }
  d.validate();
  return d;
}

}  // namespace gial
