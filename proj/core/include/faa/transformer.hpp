// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "faa/adapter.hpp"
#include "faa/config.hpp"
#include "faa/gradcheck.hpp"
#include "faa/graph.hpp"
#include "faa/rng.hpp"

namespace faa {

struct ModelConfig {
  FaaConfig faa;
  std::size_t n_blocks = 4;
  std::size_t n_heads = 2;
  std::size_t d_ff = 128;
  /// Width of the raw input rows; 0 means d_model.
  std::size_t d_input = 0;
  std::size_t n_classes = 2;
  std::size_t max_seq_len = 32;

  std::size_t d_model() const { return faa.d_model; }
  std::size_t input_width() const { return d_input == 0 ? faa.d_model : d_input; }
  void validate() const;
};

struct AttentionParams {
  Tensor w_q, w_k, w_v, w_o;  // each [d_model x d_model]
};

struct FfnParams {
  Tensor w_1;  // [d_ff x d_model]
  Tensor b_1;  // [d_ff]
  Tensor w_2;  // [d_model x d_ff]
  Tensor b_2;  // [d_model]
};

struct LayerNormParams {
  Tensor scale;  // init 1
  Tensor shift;  // init 0
};

using AdapterSlot = std::variant<std::monostate, FaaLayerParams, BaselineAdapterParams>;

struct BlockParams {
  std::size_t n_heads = 1;
  AttentionParams attn;
  FfnParams ffn;
  LayerNormParams ln_mid;
  LayerNormParams ln_out;
  AdapterSlot adapter;

  bool has_adapter() const { return !std::holds_alternative<std::monostate>(adapter); }
};

/// Tiny post-LN encoder with an adapter slot per block and a mean-pool
/// classifier head. Base (backbone) parameters are frozen at construction.
struct Model {
  ModelConfig config;
  Tensor embed;       // [d_model x d_input]
  Tensor positional;  // [max_seq_len x d_model], fixed sinusoidal, not a parameter
  std::vector<BlockParams> blocks;
  Tensor head_w;  // [n_classes x d_model]
  Tensor head_b;  // [n_classes]

  static Model init(const ModelConfig& config, std::uint64_t seed);

  void for_each_param(const ParamVisitor& visit);
  void for_each_param(const ConstParamVisitor& visit) const;
  Tensor* find_param(const std::string& name);
  std::size_t param_count(bool trainable_only = false) const;
  std::vector<std::size_t> insertion_layers() const;
};

Tensor sinusoidal_positions(std::size_t max_len, std::size_t d_model);

enum class ParamGroup { kBase, kFaa };

/// Total, disjoint assignment of every named parameter to the frozen
/// backbone or the adapter side (adapters, their gammas, the head).
struct Partition {
  std::map<std::string, ParamGroup> labels;

  std::vector<std::string> names(ParamGroup group) const;
  bool is_faa(const std::string& name) const;
};

Partition partition_params(const Model& model);
std::size_t group_param_count(const Model& model, const Partition& partition, ParamGroup group);
/// Drops every gradient that belongs to the backbone.
GradMap apply_freeze(GradMap grads, const Partition& partition);

// Graph-bound views of the block parameters.
struct AttentionVars {
  Var w_q, w_k, w_v, w_o;
  std::size_t n_heads = 1;
};
struct FfnVars {
  Var w_1, b_1, w_2, b_2;
};
struct LayerNormVars {
  Var scale, shift;
};
struct BlockVars {
  AttentionVars attn;
  FfnVars ffn;
  LayerNormVars ln_mid, ln_out;
  std::variant<std::monostate, FaaLayerVars, BaselineAdapterVars> adapter;
};

BlockVars bind(Graph& graph, BlockParams& block);

/// Dropout masks are drawn from `rng`; inactive when rng is null or rate is 0.
struct DropoutPlan {
  double rate = 0.0;
  Rng* rng = nullptr;
  bool active() const { return rng != nullptr && rate > 0.0; }
};

/// Scaled dot-product multi-head attention applied independently to each
/// consecutive group of `seq_len` rows of h. If `weights_out` is given it
/// receives one [T x T] attention matrix per (sequence, head).
Var multi_head_attention(Var h, const AttentionVars& p, std::size_t seq_len,
                         std::vector<Tensor>* weights_out = nullptr);

Var feed_forward(Var h, const FfnVars& p, const DropoutPlan& dropout = {});

/// h_attn = MHA(h_prev); h_mid = LN(h_prev + h_attn + gamma * adapter(h_attn));
/// out = LN(h_mid + FFN(h_mid)). Without an adapter the gamma term is absent.
Var block_forward(Var h_prev, const BlockVars& p, std::size_t seq_len, const DropoutPlan& dropout = {},
                  FaaTrace* trace = nullptr);

struct ForwardResult {
  Var logits;                      // [B x n_classes]
  std::vector<Var> gates;          // one [N x n] per gated insertion layer
  std::vector<std::size_t> gate_layers;
  std::vector<FaaTrace> traces;    // parallel to gate_layers
};

/// inputs: [B * seq_len x d_input] rows, sequences stacked.
ForwardResult model_forward(Graph& graph, Model& model, const Tensor& inputs, std::size_t seq_len,
                            const DropoutPlan& dropout = {});

/// Gradients of every requires_grad parameter, by name.
GradMap collect_grads(Model& model);
void zero_grads(Model& model);

}  // namespace faa
