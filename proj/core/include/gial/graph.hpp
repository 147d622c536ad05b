#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gial/matrix.hpp"

namespace gial {

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected simple graph on nodes 0..n-1. Immutable after construction.
///
/// Edges are stored canonically (u < v) and sorted. (u,v) and (v,u) name the
/// same edge; repeated pairs collapse to one, keeping the first weight.
/// Self-loops are rejected: the GCN propagation rule inserts its own.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : n_(n), neighbors_(n) {}
  Graph(std::size_t n, std::span<const Edge> edges);
  Graph(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Sorted neighbor indices of `node` (excluding itself).
  const std::vector<std::size_t>& neighbors(std::size_t node) const { return neighbors_.at(node); }
  bool has_edge(std::size_t a, std::size_t b) const;
  bool weighted() const noexcept { return weighted_; }

  static Graph complete(std::size_t n);

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
  bool weighted_ = false;
};

/// D̃^{-1/2} (A + I) D̃^{-1/2}, dense n×n. Uses edge weights when present.
Matrix normalized_adjacency(const Graph& g);

/// 0/1 mask of the GAT receptive field: A + I with unit entries.
Matrix receptive_field_mask(const Graph& g);

/// Edge counts split by whether both endpoints share a treatment, plus the
/// complete-graph even-split reference counts n²/4 − n/2 and n²/4.
struct EdgeCensus {
  std::size_t node_count = 0;
  std::size_t homogeneous = 0;
  std::size_t heterogeneous = 0;
  double expected_homogeneous = 0.0;
  double expected_heterogeneous = 0.0;

  std::size_t total() const noexcept { return homogeneous + heterogeneous; }
  /// homogeneous / heterogeneous, or nullopt when there are no heterogeneous edges.
  std::optional<double> observed_ratio() const;
  std::optional<double> expected_ratio() const;
};

/// Any edge with a nonzero weight counts once regardless of its weight.
EdgeCensus edge_census(const Graph& g, std::span<const int> treatment);

/// Reads "u<TAB>v[<TAB>weight]" lines, 0-indexed; blank lines and lines whose
/// first non-space character is '#' are skipped. Any whitespace separates
/// fields. `node_count` fixes n (indices must be below it); when absent n is
/// the largest index plus one. Throws DataError carrying the line number.
Graph read_edge_list(std::istream& in, std::optional<std::size_t> node_count = std::nullopt);
Graph read_edge_list_file(const std::string& path, std::optional<std::size_t> node_count = std::nullopt);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace gial
