#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gial/autodiff.hpp"
#include "gial/graph.hpp"
#include "gial/random.hpp"

namespace gial {

enum class EncoderKind { gcn, gat };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& s);

inline constexpr double kPreluInitialSlope = 0.25;
inline constexpr double kAttentionLeakySlope = 0.2;

struct EncoderConfig {
  EncoderKind kind = EncoderKind::gcn;
  std::size_t input_dim = 0;
  /// Width d of the node representations (and of each attention head).
  std::size_t hidden_dim = 64;
  std::size_t layers = 1;
  /// Attention heads per GAT layer; ignored for GCN.
  std::size_t heads = 1;
};

/// Dense per-graph operands, computed once and shared by every forward pass.
struct GraphContext {
  Matrix norm_adj;  // D̃^{-1/2} Ã D̃^{-1/2}
  Matrix mask;      // Ã as 0/1
};

GraphContext make_graph_context(const Graph& g);

/// prelu(A_norm · r_prev · W)
Var gcn_layer(Var r_prev, Var norm_adj, Var weight, Var slope);

struct AttentionHeadOutput {
  Var aggregated;  // Σ_j α_ij W r_j, before the nonlinearity
  Var attention;   // α, n×n, zero outside the receptive field
};

/// One attention head. The attention vector a is held as its two halves:
/// aᵀ(Wr_i ‖ Wr_j) = a_srcᵀ W r_i + a_dstᵀ W r_j.
AttentionHeadOutput gat_head(Var r_prev, const Matrix& mask, Var weight, Var a_src, Var a_dst);

enum class HeadMerge { concat, average };

struct AttentionHeadVars {
  Var weight;
  Var a_src;
  Var a_dst;
};

/// Concat: ‖_k prelu(head_k). Average: prelu(mean_k head_k).
Var gat_layer(Var r_prev, const Matrix& mask, std::span<const AttentionHeadVars> heads, HeadMerge merge,
              Var slope);

/// s = sigmoid(column mean of R), returned as a 1×d row.
Var summary_readout(Var representations);

/// Stack of GCN or GAT layers mapping (X, A) to n×d representations.
/// Intermediate GAT layers concatenate heads (width K·d); the last averages (width d).
class Encoder {
 public:
  Encoder(const EncoderConfig& config, Rng& rng);

  Var forward(Tape& tape, Var features, const GraphContext& graph);

  const EncoderConfig& config() const noexcept { return config_; }
  std::size_t output_dim() const noexcept { return config_.hidden_dim; }
  std::vector<Parameter*> parameters();

 private:
  struct Head {
    Parameter weight;
    Parameter a_src;
    Parameter a_dst;
  };
  struct Layer {
    Parameter weight;  // GCN only
    std::vector<Head> heads;  // GAT only
    Parameter slope;
  };

  EncoderConfig config_;
  std::vector<Layer> layers_;
};

}  // namespace gial
