// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faa/config.hpp"
#include "faa/graph.hpp"
#include "faa/rng.hpp"
#include "faa/tensor.hpp"

namespace faa {

using ParamVisitor = std::function<void(const std::string& name, Tensor& param)>;
using ConstParamVisitor = std::function<void(const std::string& name, const Tensor& param)>;

// Parameters of one Fourier-activated adapter. The Fourier activation runs
// at the bottleneck width w = config.bottleneck, so every activation-side
// matrix is sized by w while gamma keeps the model width.
//
// Which optional fields exist depends on the configuration:
//   simple mode            -> w_rff, b_rff; p_mix is [w x 2*D_rff]
//   gated mode             -> channel_w/b; p_mix is [w x 2w]
//     adaptive gates       -> gate_w, gate_a, gate_c
//     static_gates ablation-> static_gates
//     no_gating ablation   -> no gate parameters (gates are 1)
struct FaaLayerParams {
  ActivationMode mode = ActivationMode::kGated;

  std::optional<Tensor> w_rff;  // [w x D_rff], frozen, N(0, sigma^-2)
  std::optional<Tensor> b_rff;  // [D_rff], frozen, U(0, 2pi)
  Tensor w_base;                // [w x w]
  Tensor alpha;                 // [w]
  Tensor beta;                  // [w]
  std::vector<Tensor> channel_w;  // n x [w x w], frozen
  std::vector<Tensor> channel_b;  // n x [w], frozen, U(0, 2pi)
  std::vector<Tensor> gate_w;     // n x [w x w]
  std::optional<Tensor> gate_a;   // [n]
  std::optional<Tensor> gate_c;   // [n]
  std::optional<Tensor> static_gates;  // [n]
  Tensor p_mix;
  Tensor w_down;  // [w x d_model]
  Tensor w_up;    // [d_model x w]
  Tensor b_down;  // [w]
  Tensor b_up;    // [d_model]
  Tensor gamma;   // [d_model]

  static FaaLayerParams init(const FaaConfig& config, Rng& rng);

  std::size_t num_grids() const;
  bool adaptive_gates() const { return !gate_w.empty(); }

  /// Visits every present tensor under its checkpoint key
  /// (W_rff, b_rff, W_base, alpha, beta, channel_W.i, channel_b.i, gate_W.i,
  /// gate_a, gate_c, gate_r, P_mix, W_down, W_up, b_down, b_up, gamma).
  void for_each(const ParamVisitor& visit);
  void for_each(const ConstParamVisitor& visit) const;
};

/// Plain bottleneck adapter with GELU, plus the block-level gamma.
struct BaselineAdapterParams {
  Tensor w_down;  // [r x d_model]
  Tensor w_up;    // [d_model x r]
  Tensor b_down;  // [r]
  Tensor b_up;    // [d_model]
  Tensor gamma;   // [d_model]

  static BaselineAdapterParams init(std::size_t d_model, std::size_t bottleneck, Rng& rng);
  void for_each(const ParamVisitor& visit);
  void for_each(const ConstParamVisitor& visit) const;
};

/// FaaLayerParams bound as leaves of one graph.
struct FaaLayerVars {
  ActivationMode mode = ActivationMode::kGated;
  std::optional<Var> w_rff, b_rff;
  Var w_base, alpha, beta;
  std::vector<Var> channel_w, channel_b, gate_w;
  std::optional<Var> gate_a, gate_c, static_gates;
  Var p_mix, w_down, w_up, b_down, b_up, gamma;
};

struct BaselineAdapterVars {
  Var w_down, w_up, b_down, b_up, gamma;
};

FaaLayerVars bind(Graph& graph, FaaLayerParams& params);
BaselineAdapterVars bind(Graph& graph, BaselineAdapterParams& params);

/// Intermediates captured during a forward pass, for the regularizer and
/// frequency reports. Only gated mode fills them.
struct FaaTrace {
  std::optional<Var> gates;            // [N x n]
  std::vector<Var> normalized_channels;  // n x [N x 2w], LayerNorm(g_i)
};

// All operations act row-wise on a batch h[N x w]; a single vector is the
// N = 1 case.

/// sqrt(2 / D_rff) * [cos(h W_rff + b_rff) ++ sin(h W_rff + b_rff)] -> [N x 2 D_rff].
Var rff_transform(Var h, const FaaLayerVars& p);

/// g_i = cos(h W_i^T + b_i) ++ sin(h W_i^T + b_i) -> n x [N x 2w].
std::vector<Var> frequency_channels(Var h, const FaaLayerVars& p);

/// r_i = sigmoid(a_i * mean_k (h W_gate,i^T)_k + c_i) -> [N x n].
Var channel_gates(Var h, const FaaLayerVars& p);

/// Gates in force for this layer: adaptive, static (broadcast), or all ones.
Var layer_gates(Var h, const FaaLayerVars& p);

/// sum_i r_i * LayerNorm(g_i). Throws ContractError on an empty channel list.
Var gated_aggregate(std::span<const Var> channels, Var gates, FaaTrace* trace = nullptr);

/// alpha * GELU(h W_base^T) + beta * (z P_mix^T), z from the gated
/// aggregate or the simple RFF map depending on `mode`.
Var fourier_activation(Var h, const FaaLayerVars& p, ActivationMode mode, FaaTrace* trace = nullptr);

/// h + W_up * fourier_activation(W_down h + b_down) + b_up.
Var faa_adapter_forward(Var h, const FaaLayerVars& p, FaaTrace* trace = nullptr);

/// h + W_up * GELU(W_down h + b_down) + b_up.
Var baseline_adapter_forward(Var h, const BaselineAdapterVars& p);

std::size_t count_params(const FaaLayerParams& p, bool trainable_only);
std::size_t count_params(const BaselineAdapterParams& p, bool trainable_only);

}  // namespace faa
