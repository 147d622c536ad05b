#include "gial/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gial/error.hpp"
#include "gial/format.hpp"

namespace gial {

Graph::Graph(std::size_t n, std::span<const Edge> edges) : n_(n), neighbors_(n) {
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw ContractViolation("Graph: edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                              ") out of range for n=" + std::to_string(n));
    }
    if (e.u == e.v) throw ContractViolation("Graph: self-loop at node " + std::to_string(e.u));
    edges_.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.weight});
  }
  std::stable_sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  edges_.erase(std::unique(edges_.begin(), edges_.end(),
                           [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
               edges_.end());
  for (const Edge& e : edges_) {
    neighbors_[e.u].push_back(e.v);
    neighbors_[e.v].push_back(e.u);
    if (e.weight != 1.0) weighted_ = true;
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

namespace {

std::vector<Edge> to_edges(std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<Edge> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back({a, b, 1.0});
  return out;
}

}  // namespace

Graph::Graph(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges)
    : Graph(n, to_edges(edges)) {}

bool Graph::has_edge(std::size_t a, std::size_t b) const {
  if (a >= n_ || b >= n_ || a == b) return false;
  const auto& nb = neighbors_[a];
  return std::binary_search(nb.begin(), nb.end(), b);
}

Graph Graph::complete(std::size_t n) {
  std::vector<Edge> edges;
  edges.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) edges.push_back({u, v, 1.0});
  return Graph(n, edges);
}

Matrix normalized_adjacency(const Graph& g) {
  const std::size_t n = g.node_count();
  Matrix a = Matrix::identity(n);
  for (const Edge& e : g.edges()) {
    a(e.u, e.v) = e.weight;
    a(e.v, e.u) = e.weight;
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    inv_sqrt_deg[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  return a;
}

Matrix receptive_field_mask(const Graph& g) {
  Matrix m = Matrix::identity(g.node_count());
  for (const Edge& e : g.edges()) {
    m(e.u, e.v) = 1.0;
    m(e.v, e.u) = 1.0;
  }
  return m;
}

std::optional<double> EdgeCensus::observed_ratio() const {
  if (heterogeneous == 0) return std::nullopt;
  return static_cast<double>(homogeneous) / static_cast<double>(heterogeneous);
}

std::optional<double> EdgeCensus::expected_ratio() const {
  if (expected_heterogeneous <= 0.0) return std::nullopt;
  return expected_homogeneous / expected_heterogeneous;
}

EdgeCensus edge_census(const Graph& g, std::span<const int> treatment) {
  const std::size_t n = g.node_count();
  if (treatment.size() != n) {
    throw ContractViolation("edge_census: treatment length " + std::to_string(treatment.size()) +
                            " != node count " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i] != 0 && treatment[i] != 1) {
      throw ContractViolation("edge_census: treatment[" + std::to_string(i) + "] not in {0,1}");
    }
  }
  EdgeCensus c;
  c.node_count = n;
  for (const Edge& e : g.edges()) {
    if (e.weight == 0.0) continue;
    if (treatment[e.u] == treatment[e.v]) {
      ++c.homogeneous;
    } else {
      ++c.heterogeneous;
    }
  }
  const double nd = static_cast<double>(n);
  c.expected_homogeneous = nd * nd / 4.0 - nd / 2.0;
  c.expected_heterogeneous = nd * nd / 4.0;
  return c;
}

namespace {

bool parse_index(const std::string& tok, std::size_t& out) {
  if (tok.empty() || tok[0] == '-' || tok[0] == '+') return false;
  std::size_t pos = 0;
  try {
    const unsigned long long v = std::stoull(tok, &pos);
    out = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size();
}

}  // namespace

Graph read_edge_list(std::istream& in, std::optional<std::size_t> node_count) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string a, b, w, extra;
    fields >> a >> b;
    if (b.empty()) throw DataError("expected two node indices, got '" + line + "'", line_no);
    Edge e;
    if (!parse_index(a, e.u) || !parse_index(b, e.v)) {
      throw DataError("node indices must be non-negative integers: '" + line + "'", line_no);
    }
    if (fields >> w) {
      if (!parse_double(w, e.weight) || !std::isfinite(e.weight)) {
        throw DataError("bad edge weight '" + w + "'", line_no);
      }
      if (fields >> extra) throw DataError("too many fields: '" + line + "'", line_no);
    }
    if (e.u == e.v) throw DataError("self-loop at node " + std::to_string(e.u), line_no);
    if (node_count && (e.u >= *node_count || e.v >= *node_count)) {
      throw DataError("node index out of range for n=" + std::to_string(*node_count), line_no);
    }
    max_index = std::max({max_index, e.u, e.v});
    any = true;
    edges.push_back(e);
  }
  const std::size_t n = node_count ? *node_count : (any ? max_index + 1 : 0);
  return Graph(n, edges);
}

Graph read_edge_list_file(const std::string& path, std::optional<std::size_t> node_count) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list '" + path + "'");
  return read_edge_list(in, node_count);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (const Edge& e : g.edges()) {
    out << e.u << '\t' << e.v;
    if (g.weighted()) out << '\t' << format_double(e.weight);
    out << '\n';
  }
}

}  // namespace gial
