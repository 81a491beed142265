// SPDX-License-Identifier: Apache-2.0
#include "faa/adapter.hpp"

#include <cmath>
#include <numbers>

#include "faa/errors.hpp"
#include "faa/init.hpp"
#include "faa/ops.hpp"

namespace faa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string indexed(const char* base, std::size_t i) { return std::string(base) + "." + std::to_string(i); }

template <typename Params, typename Visitor>
void visit_faa(Params& p, const Visitor& visit) {
  if (p.w_rff) visit("W_rff", *p.w_rff);
  if (p.b_rff) visit("b_rff", *p.b_rff);
  visit("W_base", p.w_base);
  visit("alpha", p.alpha);
  visit("beta", p.beta);
  for (std::size_t i = 0; i < p.channel_w.size(); ++i) visit(indexed("channel_W", i), p.channel_w[i]);
  for (std::size_t i = 0; i < p.channel_b.size(); ++i) visit(indexed("channel_b", i), p.channel_b[i]);
  for (std::size_t i = 0; i < p.gate_w.size(); ++i) visit(indexed("gate_W", i), p.gate_w[i]);
  if (p.gate_a) visit("gate_a", *p.gate_a);
  if (p.gate_c) visit("gate_c", *p.gate_c);
  if (p.static_gates) visit("gate_r", *p.static_gates);
  visit("P_mix", p.p_mix);
  visit("W_down", p.w_down);
  visit("W_up", p.w_up);
  visit("b_down", p.b_down);
  visit("b_up", p.b_up);
  visit("gamma", p.gamma);
}

template <typename Params, typename Visitor>
void visit_baseline(Params& p, const Visitor& visit) {
  visit("W_down", p.w_down);
  visit("W_up", p.w_up);
  visit("b_down", p.b_down);
  visit("b_up", p.b_up);
  visit("gamma", p.gamma);
}

}  // namespace

FaaLayerParams FaaLayerParams::init(const FaaConfig& config, Rng& rng) {
  config.validate();
  const std::size_t w = config.bottleneck;
  const std::size_t d = config.d_model;
  const std::size_t n = config.num_grids;
  const bool unfreeze = config.ablation.unfreeze_rff;

  FaaLayerParams p;
  p.mode = config.mode;
  Rng rwb = rng.substream("W_base");
  p.w_base = init::xavier_uniform(w, w, rwb);
  const bool fusion_trainable = !config.ablation.fixed_fusion;
  p.alpha = Tensor::full({w}, 1.0, fusion_trainable);
  p.beta = Tensor::full({w}, config.ablation.fixed_fusion ? 1.0 : 0.1, fusion_trainable);

  if (config.mode == ActivationMode::kSimple) {
    const std::size_t D = config.effective_rff_dim();
    Rng r = rng.substream("W_rff");
    p.w_rff = init::gaussian({w, D}, 1.0 / config.sigma, r, unfreeze);
    Rng rb = rng.substream("b_rff");
    p.b_rff = init::uniform({D}, 0.0, kTwoPi, rb, false);
    Rng rp = rng.substream("P_mix");
    p.p_mix = init::xavier_uniform(w, 2 * D, rp);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      // Channel i samples a bandwidth on a uniform grid up to 1/sigma.
      const double stddev = static_cast<double>(i + 1) / static_cast<double>(n) / config.sigma;
      Rng rw = rng.substream("channel_W", i);
      p.channel_w.push_back(init::gaussian({w, w}, stddev, rw, unfreeze));
      Rng rb = rng.substream("channel_b", i);
      p.channel_b.push_back(init::uniform({w}, 0.0, kTwoPi, rb, false));
    }
    if (config.ablation.static_gates) {
      Rng rs = rng.substream("gate_r");
      p.static_gates = init::xavier_uniform_vector(n, rs);
    } else if (!config.ablation.no_gating) {
      for (std::size_t i = 0; i < n; ++i) {
        Rng rg = rng.substream("gate_W", i);
        p.gate_w.push_back(init::xavier_uniform(w, w, rg));
      }
      p.gate_a = Tensor::full({n}, 1.0, true);
      p.gate_c = Tensor::full({n}, 0.0, true);
    }
    Rng rp = rng.substream("P_mix");
    p.p_mix = init::xavier_uniform(w, 2 * w, rp);
  }

  Rng rd = rng.substream("W_down");
  p.w_down = init::xavier_uniform(w, d, rd);
  Rng ru = rng.substream("W_up");
  p.w_up = init::xavier_uniform(d, w, ru);
  p.b_down = Tensor::zeros({w}, true);
  p.b_up = Tensor::zeros({d}, true);
  p.gamma = Tensor::zeros({d}, true);
  return p;
}

std::size_t FaaLayerParams::num_grids() const {
  if (!channel_w.empty()) return channel_w.size();
  return 0;
}

void FaaLayerParams::for_each(const ParamVisitor& visit) { visit_faa(*this, visit); }
void FaaLayerParams::for_each(const ConstParamVisitor& visit) const { visit_faa(*this, visit); }

BaselineAdapterParams BaselineAdapterParams::init(std::size_t d_model, std::size_t bottleneck, Rng& rng) {
  if (d_model < 1 || bottleneck < 1) throw ConfigError("baseline adapter widths must be >= 1");
  BaselineAdapterParams p;
  Rng rd = rng.substream("W_down");
  p.w_down = init::xavier_uniform(bottleneck, d_model, rd);
  Rng ru = rng.substream("W_up");
  p.w_up = init::xavier_uniform(d_model, bottleneck, ru);
  p.b_down = Tensor::zeros({bottleneck}, true);
  p.b_up = Tensor::zeros({d_model}, true);
  p.gamma = Tensor::zeros({d_model}, true);
  return p;
}

void BaselineAdapterParams::for_each(const ParamVisitor& visit) { visit_baseline(*this, visit); }
void BaselineAdapterParams::for_each(const ConstParamVisitor& visit) const { visit_baseline(*this, visit); }

FaaLayerVars bind(Graph& graph, FaaLayerParams& params) {
  FaaLayerVars v;
  v.mode = params.mode;
  if (params.w_rff) v.w_rff = graph.param(*params.w_rff);
  if (params.b_rff) v.b_rff = graph.param(*params.b_rff);
  v.w_base = graph.param(params.w_base);
  v.alpha = graph.param(params.alpha);
  v.beta = graph.param(params.beta);
  for (Tensor& t : params.channel_w) v.channel_w.push_back(graph.param(t));
  for (Tensor& t : params.channel_b) v.channel_b.push_back(graph.param(t));
  for (Tensor& t : params.gate_w) v.gate_w.push_back(graph.param(t));
  if (params.gate_a) v.gate_a = graph.param(*params.gate_a);
  if (params.gate_c) v.gate_c = graph.param(*params.gate_c);
  if (params.static_gates) v.static_gates = graph.param(*params.static_gates);
  v.p_mix = graph.param(params.p_mix);
  v.w_down = graph.param(params.w_down);
  v.w_up = graph.param(params.w_up);
  v.b_down = graph.param(params.b_down);
  v.b_up = graph.param(params.b_up);
  v.gamma = graph.param(params.gamma);
  return v;
}

BaselineAdapterVars bind(Graph& graph, BaselineAdapterParams& params) {
  return {graph.param(params.w_down), graph.param(params.w_up), graph.param(params.b_down),
          graph.param(params.b_up), graph.param(params.gamma)};
}

Var rff_transform(Var h, const FaaLayerVars& p) {
  if (!p.w_rff || !p.b_rff) throw ContractError("rff_transform: layer has no random Fourier feature map");
  const std::size_t D = p.w_rff->cols();
  if (h.cols() != p.w_rff->rows()) {
    throw DimensionError("rff_transform: input " + shape_str(h.shape()) + " vs W_rff " +
                         shape_str(p.w_rff->shape()));
  }
  Var u = add_row(matmul(h, *p.w_rff), *p.b_rff);
  const Var parts[] = {cos(u), sin(u)};
  return scale(concat_cols(parts), std::sqrt(2.0 / static_cast<double>(D)));
}

std::vector<Var> frequency_channels(Var h, const FaaLayerVars& p) {
  if (p.channel_w.empty()) throw ContractError("frequency_channels: layer has no frequency channels");
  std::vector<Var> out;
  out.reserve(p.channel_w.size());
  for (std::size_t i = 0; i < p.channel_w.size(); ++i) {
    if (h.cols() != p.channel_w[i].cols()) {
      throw DimensionError("frequency_channels: input " + shape_str(h.shape()) + " vs channel_W " +
                           shape_str(p.channel_w[i].shape()));
    }
    Var u = linear(h, p.channel_w[i], p.channel_b[i]);
    const Var parts[] = {cos(u), sin(u)};
    out.push_back(concat_cols(parts));
  }
  return out;
}

Var channel_gates(Var h, const FaaLayerVars& p) {
  if (p.gate_w.empty() || !p.gate_a || !p.gate_c) throw ContractError("channel_gates: layer has no adaptive gates");
  std::vector<Var> z;
  z.reserve(p.gate_w.size());
  for (const Var& wg : p.gate_w) z.push_back(row_mean(linear(h, wg)));
  Var zt = concat_cols(z);
  return sigmoid(add_row(mul_row(zt, *p.gate_a), *p.gate_c));
}

Var layer_gates(Var h, const FaaLayerVars& p) {
  if (!p.gate_w.empty()) return channel_gates(h, p);
  const std::size_t n = p.channel_w.size();
  Graph& g = *h.graph();
  if (p.static_gates) return add_row(g.constant(Tensor::zeros({h.rows(), n})), *p.static_gates);
  return g.constant(Tensor::full({h.rows(), n}, 1.0));
}

Var gated_aggregate(std::span<const Var> channels, Var gates, FaaTrace* trace) {
  if (channels.empty()) throw ContractError("gated_aggregate: empty channel list");
  if (gates.cols() != channels.size() || gates.rows() != channels[0].rows()) {
    throw DimensionError("gated_aggregate: gates " + shape_str(gates.shape()) + " for " +
                         std::to_string(channels.size()) + " channels of " + shape_str(channels[0].shape()));
  }
  if (trace) {
    trace->gates = gates;
    trace->normalized_channels.clear();
  }
  std::optional<Var> acc;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    Var ln = layernorm(channels[i]);
    if (trace) trace->normalized_channels.push_back(ln);
    Var term = mul_col(ln, slice_cols(gates, i, 1));
    acc = acc ? add(*acc, term) : term;
  }
  return *acc;
}

Var fourier_activation(Var h, const FaaLayerVars& p, ActivationMode mode, FaaTrace* trace) {
  if (mode != p.mode) throw ContractError("fourier_activation: mode does not match the layer's parameters");
  Var base = mul_row(gelu(linear(h, p.w_base)), p.alpha);
  Var z;
  if (mode == ActivationMode::kSimple) {
    z = rff_transform(h, p);
  } else {
    std::vector<Var> channels = frequency_channels(h, p);
    z = gated_aggregate(channels, layer_gates(h, p), trace);
  }
  if (z.cols() != p.p_mix.cols()) {
    throw DimensionError("fourier_activation: Fourier features " + shape_str(z.shape()) + " vs P_mix " +
                         shape_str(p.p_mix.shape()));
  }
  return add(base, mul_row(linear(z, p.p_mix), p.beta));
}

Var faa_adapter_forward(Var h, const FaaLayerVars& p, FaaTrace* trace) {
  Var down = linear(h, p.w_down, p.b_down);
  Var act = fourier_activation(down, p, p.mode, trace);
  return add(h, linear(act, p.w_up, p.b_up));
}

Var baseline_adapter_forward(Var h, const BaselineAdapterVars& p) {
  Var act = gelu(linear(h, p.w_down, p.b_down));
  return add(h, linear(act, p.w_up, p.b_up));
}

namespace {

template <typename Params>
std::size_t count_impl(const Params& p, bool trainable_only) {
  std::size_t n = 0;
  p.for_each(ConstParamVisitor([&](const std::string&, const Tensor& t) {
    if (!trainable_only || t.requires_grad()) n += t.numel();
  }));
  return n;
}

}  // namespace

std::size_t count_params(const FaaLayerParams& p, bool trainable_only) { return count_impl(p, trainable_only); }
std::size_t count_params(const BaselineAdapterParams& p, bool trainable_only) {
  return count_impl(p, trainable_only);
}

}  // namespace faa
