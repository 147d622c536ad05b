#include "gial/encoders.hpp"

#include <cmath>

#include "gial/error.hpp"

namespace gial {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::gcn ? "gcn" : "gat"; }

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "gcn" || s == "GCN") return EncoderKind::gcn;
  if (s == "gat" || s == "GAT") return EncoderKind::gat;
  throw ContractViolation("unknown encoder kind '" + s + "' (expected gcn or gat)");
}

GraphContext make_graph_context(const Graph& g) {
  return {normalized_adjacency(g), receptive_field_mask(g)};
}

Var gcn_layer(Var r_prev, Var norm_adj, Var weight, Var slope) {
  const std::size_t n = r_prev.rows();
  if (norm_adj.rows() != n || norm_adj.cols() != n) {
    throw DimensionError("gcn_layer: adjacency " + norm_adj.value().shape_string() + " for " +
                         std::to_string(n) + " nodes");
  }
  return prelu(matmul(norm_adj, matmul(r_prev, weight)), slope);
}

AttentionHeadOutput gat_head(Var r_prev, const Matrix& mask, Var weight, Var a_src, Var a_dst) {
  const std::size_t n = r_prev.rows();
  if (mask.rows() != n || mask.cols() != n) {
    throw DimensionError("gat_head: mask " + mask.shape_string() + " for " + std::to_string(n) + " nodes");
  }
  Var h = matmul(r_prev, weight);
  Var scores = leaky_relu(outer_sum(matmul(h, a_src), transpose(matmul(h, a_dst))), kAttentionLeakySlope);
  Var alpha = masked_softmax_rows(scores, mask);
  return {matmul(alpha, h), alpha};
}

Var gat_layer(Var r_prev, const Matrix& mask, std::span<const AttentionHeadVars> heads, HeadMerge merge,
              Var slope) {
  if (heads.empty()) throw ContractViolation("gat_layer: at least one head required");
  std::vector<Var> outs;
  outs.reserve(heads.size());
  for (const AttentionHeadVars& hv : heads) {
    outs.push_back(gat_head(r_prev, mask, hv.weight, hv.a_src, hv.a_dst).aggregated);
  }
  if (merge == HeadMerge::concat) {
    for (Var& o : outs) o = prelu(o, slope);
    return outs.size() == 1 ? outs.front() : concat_cols(outs);
  }
  Var acc = outs.front();
  for (std::size_t k = 1; k < outs.size(); ++k) acc = acc + outs[k];
  if (outs.size() > 1) acc = scale(acc, 1.0 / static_cast<double>(outs.size()));
  return prelu(acc, slope);
}

Var summary_readout(Var representations) {
  if (representations.rows() == 0 || representations.cols() == 0) {
    throw ContractViolation("summary_readout: empty representation matrix");
  }
  return sigmoid(column_mean(representations));
}

namespace {

Parameter init_weight(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  return Parameter(name, uniform_matrix(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng));
}

}  // namespace

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  if (config.input_dim == 0 || config.hidden_dim == 0) {
    throw ContractViolation("Encoder: input_dim and hidden_dim must be positive");
  }
  if (config.layers == 0) throw ContractViolation("Encoder: at least one layer required");
  if (config.kind == EncoderKind::gat && config.heads == 0) {
    throw ContractViolation("Encoder: GAT needs at least one head");
  }
  std::size_t in = config.input_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string prefix = "encoder.layer" + std::to_string(l);
    Layer layer;
    layer.slope = Parameter(prefix + ".prelu", Matrix(1, 1, kPreluInitialSlope), false);
    if (config.kind == EncoderKind::gcn) {
      layer.weight = init_weight(prefix + ".W", in, config.hidden_dim, rng);
      in = config.hidden_dim;
    } else {
      for (std::size_t k = 0; k < config.heads; ++k) {
        const std::string hp = prefix + ".head" + std::to_string(k);
        Head head;
        head.weight = init_weight(hp + ".W", in, config.hidden_dim, rng);
        head.a_src = init_weight(hp + ".a_src", config.hidden_dim, 1, rng);
        head.a_dst = init_weight(hp + ".a_dst", config.hidden_dim, 1, rng);
        layer.heads.push_back(std::move(head));
      }
      const bool last = l + 1 == config.layers;
      in = last ? config.hidden_dim : config.hidden_dim * config.heads;
    }
    layers_.push_back(std::move(layer));
  }
}

Var Encoder::forward(Tape& tape, Var features, const GraphContext& graph) {
  if (features.cols() != config_.input_dim) {
    throw DimensionError("Encoder: features have " + std::to_string(features.cols()) + " columns, expected " +
                         std::to_string(config_.input_dim));
  }
  Var r = features;
  if (config_.kind == EncoderKind::gcn) {
    Var adj = tape.constant(graph.norm_adj);
    for (Layer& layer : layers_) r = gcn_layer(r, adj, tape.param(layer.weight), tape.param(layer.slope));
    return r;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    std::vector<AttentionHeadVars> heads;
    for (Head& h : layer.heads) heads.push_back({tape.param(h.weight), tape.param(h.a_src), tape.param(h.a_dst)});
    const HeadMerge merge = l + 1 == layers_.size() ? HeadMerge::average : HeadMerge::concat;
    r = gat_layer(r, graph.mask, heads, merge, tape.param(layer.slope));
  }
  return r;
}

std::vector<Parameter*> Encoder::parameters() {
  std::vector<Parameter*> out;
  for (Layer& layer : layers_) {
    if (config_.kind == EncoderKind::gcn) {
      out.push_back(&layer.weight);
    } else {
      for (Head& h : layer.heads) {
        out.push_back(&h.weight);
        out.push_back(&h.a_src);
        out.push_back(&h.a_dst);
      }
    }
    out.push_back(&layer.slope);
  }
  return out;
}

}  // namespace gial
