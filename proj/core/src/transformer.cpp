// SPDX-License-Identifier: Apache-2.0
#include "faa/transformer.hpp"

#include <cmath>
#include <type_traits>

#include "faa/errors.hpp"
#include "faa/init.hpp"
#include "faa/ops.hpp"

namespace faa {
namespace {

Tensor frozen(Tensor t) {
  t.set_requires_grad(false);
  return t;
}

LayerNormParams make_layernorm(std::size_t d) { return {Tensor::full({d}, 1.0), Tensor::zeros({d})}; }

std::string block_prefix(std::size_t l) { return "blocks." + std::to_string(l) + "."; }

template <typename M, typename Visitor>
void visit_model(M& m, const Visitor& visit) {
  visit("embed.W", m.embed);
  for (std::size_t l = 0; l < m.blocks.size(); ++l) {
    auto& b = m.blocks[l];
    const std::string pre = block_prefix(l);
    visit(pre + "attn.W_q", b.attn.w_q);
    visit(pre + "attn.W_k", b.attn.w_k);
    visit(pre + "attn.W_v", b.attn.w_v);
    visit(pre + "attn.W_o", b.attn.w_o);
    visit(pre + "ffn.W_1", b.ffn.w_1);
    visit(pre + "ffn.b_1", b.ffn.b_1);
    visit(pre + "ffn.W_2", b.ffn.w_2);
    visit(pre + "ffn.b_2", b.ffn.b_2);
    visit(pre + "ln_mid.scale", b.ln_mid.scale);
    visit(pre + "ln_mid.shift", b.ln_mid.shift);
    visit(pre + "ln_out.scale", b.ln_out.scale);
    visit(pre + "ln_out.shift", b.ln_out.shift);
    using Visit = std::conditional_t<std::is_const_v<M>, ConstParamVisitor, ParamVisitor>;
    using TensorRef = std::conditional_t<std::is_const_v<M>, const Tensor&, Tensor&>;
    if (auto* f = std::get_if<FaaLayerParams>(&b.adapter)) {
      f->for_each(Visit([&](const std::string& name, TensorRef t) { visit(pre + "faa." + name, t); }));
    } else if (auto* a = std::get_if<BaselineAdapterParams>(&b.adapter)) {
      a->for_each(Visit([&](const std::string& name, TensorRef t) { visit(pre + "adapter." + name, t); }));
    }
  }
  visit("head.W", m.head_w);
  visit("head.b", m.head_b);
}

Var dropout(Var x, const DropoutPlan& plan) {
  if (!plan.active()) return x;
  const double keep = 1.0 - plan.rate;
  std::vector<double> mask(x.value().numel());
  for (double& v : mask) v = plan.rng->uniform() < plan.rate ? 0.0 : 1.0 / keep;
  return mul(x, x.graph()->constant(Tensor(x.shape(), std::move(mask))));
}

}  // namespace

void ModelConfig::validate() const {
  faa.validate();
  if (n_blocks < 1) throw ConfigError("model.n_blocks must be >= 1");
  if (n_heads < 1 || faa.d_model % n_heads != 0) throw ConfigError("model.n_heads must divide faa.d_model");
  if (d_ff < 1) throw ConfigError("model.d_ff must be >= 1");
  if (n_classes < 2) throw ConfigError("model.n_classes must be >= 2");
  if (max_seq_len < 1) throw ConfigError("model.max_seq_len must be >= 1");
  for (std::size_t l : faa.insertion_layers) {
    if (l >= n_blocks) {
      throw ConfigError("faa.insertion_layers: layer " + std::to_string(l) + " outside [0, " +
                        std::to_string(n_blocks) + ")");
    }
  }
}

Tensor sinusoidal_positions(std::size_t max_len, std::size_t d_model) {
  std::vector<double> pe(max_len * d_model);
  for (std::size_t t = 0; t < max_len; ++t) {
    for (std::size_t j = 0; j < d_model; ++j) {
      const double i2 = static_cast<double>(j - j % 2);
      const double angle = static_cast<double>(t) / std::pow(10000.0, i2 / static_cast<double>(d_model));
      pe[t * d_model + j] = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor({max_len, d_model}, std::move(pe));
}

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.d_model();
  Rng root(seed, "model");
  Rng base = root.substream("base");

  Model m;
  m.config = config;
  {
    Rng r = base.substream("embed");
    m.embed = frozen(init::xavier_uniform(d, config.input_width(), r));
  }
  m.positional = sinusoidal_positions(config.max_seq_len, d);
  for (std::size_t l = 0; l < config.n_blocks; ++l) {
    Rng rb = base.substream("block", l);
    BlockParams b;
    b.n_heads = config.n_heads;
    Rng rq = rb.substream("W_q"), rk = rb.substream("W_k"), rv = rb.substream("W_v"), ro = rb.substream("W_o");
    b.attn.w_q = frozen(init::xavier_uniform(d, d, rq));
    b.attn.w_k = frozen(init::xavier_uniform(d, d, rk));
    b.attn.w_v = frozen(init::xavier_uniform(d, d, rv));
    b.attn.w_o = frozen(init::xavier_uniform(d, d, ro));
    Rng r1 = rb.substream("W_1"), r2 = rb.substream("W_2");
    b.ffn.w_1 = frozen(init::xavier_uniform(config.d_ff, d, r1));
    b.ffn.b_1 = Tensor::zeros({config.d_ff});
    b.ffn.w_2 = frozen(init::xavier_uniform(d, config.d_ff, r2));
    b.ffn.b_2 = Tensor::zeros({d});
    b.ln_mid = make_layernorm(d);
    b.ln_out = make_layernorm(d);
    if (config.faa.inserted_at(l)) {
      Rng ra = root.substream("adapter", l);
      if (config.faa.adapter == AdapterKind::kFaa) {
        b.adapter = FaaLayerParams::init(config.faa, ra);
      } else {
        b.adapter = BaselineAdapterParams::init(d, config.faa.bottleneck, ra);
      }
    }
    m.blocks.push_back(std::move(b));
  }
  Rng rh = root.substream("head");
  m.head_w = init::xavier_uniform(config.n_classes, d, rh);
  m.head_b = Tensor::zeros({config.n_classes}, true);
  return m;
}

void Model::for_each_param(const ParamVisitor& visit) { visit_model(*this, visit); }
void Model::for_each_param(const ConstParamVisitor& visit) const { visit_model(*this, visit); }

Tensor* Model::find_param(const std::string& name) {
  Tensor* found = nullptr;
  for_each_param([&](const std::string& n, Tensor& t) {
    if (n == name) found = &t;
  });
  return found;
}

std::size_t Model::param_count(bool trainable_only) const {
  std::size_t n = 0;
  for_each_param(ConstParamVisitor([&](const std::string&, const Tensor& t) {
    if (!trainable_only || t.requires_grad()) n += t.numel();
  }));
  return n;
}

std::vector<std::size_t> Model::insertion_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    if (blocks[l].has_adapter()) out.push_back(l);
  }
  return out;
}

std::vector<std::string> Partition::names(ParamGroup group) const {
  std::vector<std::string> out;
  for (const auto& [name, g] : labels) {
    if (g == group) out.push_back(name);
  }
  return out;
}

bool Partition::is_faa(const std::string& name) const {
  auto it = labels.find(name);
  return it != labels.end() && it->second == ParamGroup::kFaa;
}

Partition partition_params(const Model& model) {
  Partition p;
  model.for_each_param(ConstParamVisitor([&](const std::string& name, const Tensor&) {
    std::optional<ParamGroup> group;
    if (name.rfind("head.", 0) == 0 || name.find(".faa.") != std::string::npos ||
        name.find(".adapter.") != std::string::npos) {
      group = ParamGroup::kFaa;
    } else if (name.rfind("embed.", 0) == 0 || name.find(".attn.") != std::string::npos ||
               name.find(".ffn.") != std::string::npos || name.find(".ln_mid.") != std::string::npos ||
               name.find(".ln_out.") != std::string::npos) {
      group = ParamGroup::kBase;
    }
    if (!group) throw ContractError("partition_params: parameter '" + name + "' is not assigned to any group");
    if (!p.labels.emplace(name, *group).second) {
      throw ContractError("partition_params: parameter '" + name + "' assigned twice");
    }
  }));
  return p;
}

std::size_t group_param_count(const Model& model, const Partition& partition, ParamGroup group) {
  std::size_t n = 0;
  model.for_each_param(ConstParamVisitor([&](const std::string& name, const Tensor& t) {
    auto it = partition.labels.find(name);
    if (it != partition.labels.end() && it->second == group) n += t.numel();
  }));
  return n;
}

GradMap apply_freeze(GradMap grads, const Partition& partition) {
  for (auto it = grads.begin(); it != grads.end();) {
    if (partition.is_faa(it->first)) {
      ++it;
    } else {
      it = grads.erase(it);
    }
  }
  return grads;
}

BlockVars bind(Graph& graph, BlockParams& block) {
  BlockVars v;
  v.attn = {graph.param(block.attn.w_q), graph.param(block.attn.w_k), graph.param(block.attn.w_v),
            graph.param(block.attn.w_o), block.n_heads};
  v.ffn = {graph.param(block.ffn.w_1), graph.param(block.ffn.b_1), graph.param(block.ffn.w_2),
           graph.param(block.ffn.b_2)};
  v.ln_mid = {graph.param(block.ln_mid.scale), graph.param(block.ln_mid.shift)};
  v.ln_out = {graph.param(block.ln_out.scale), graph.param(block.ln_out.shift)};
  if (auto* f = std::get_if<FaaLayerParams>(&block.adapter)) {
    v.adapter = bind(graph, *f);
  } else if (auto* a = std::get_if<BaselineAdapterParams>(&block.adapter)) {
    v.adapter = bind(graph, *a);
  }
  return v;
}

Var multi_head_attention(Var h, const AttentionVars& p, std::size_t seq_len, std::vector<Tensor>* weights_out) {
  const std::size_t rows = h.rows(), d = h.cols();
  if (seq_len == 0 || rows % seq_len != 0) {
    throw DimensionError("multi_head_attention: " + std::to_string(rows) + " rows are not a multiple of seq_len " +
                         std::to_string(seq_len));
  }
  if (p.n_heads == 0 || d % p.n_heads != 0) throw DimensionError("multi_head_attention: heads must divide width");
  const std::size_t dh = d / p.n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Var q = linear(h, p.w_q), k = linear(h, p.w_k), v = linear(h, p.w_v);

  std::vector<Var> seqs;
  for (std::size_t b = 0; b * seq_len < rows; ++b) {
    Var qs = slice_rows(q, b * seq_len, seq_len);
    Var ks = slice_rows(k, b * seq_len, seq_len);
    Var vs = slice_rows(v, b * seq_len, seq_len);
    std::vector<Var> heads;
    for (std::size_t hd = 0; hd < p.n_heads; ++hd) {
      Var qh = p.n_heads == 1 ? qs : slice_cols(qs, hd * dh, dh);
      Var kh = p.n_heads == 1 ? ks : slice_cols(ks, hd * dh, dh);
      Var vh = p.n_heads == 1 ? vs : slice_cols(vs, hd * dh, dh);
      Var att = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
      if (weights_out) weights_out->push_back(att.value());
      heads.push_back(matmul(att, vh));
    }
    seqs.push_back(heads.size() == 1 ? heads[0] : concat_cols(heads));
  }
  Var merged = seqs.size() == 1 ? seqs[0] : concat_rows(seqs);
  return linear(merged, p.w_o);
}

Var feed_forward(Var h, const FfnVars& p, const DropoutPlan& plan) {
  Var hidden = dropout(gelu(linear(h, p.w_1, p.b_1)), plan);
  return linear(hidden, p.w_2, p.b_2);
}

Var block_forward(Var h_prev, const BlockVars& p, std::size_t seq_len, const DropoutPlan& plan, FaaTrace* trace) {
  Var attn = dropout(multi_head_attention(h_prev, p.attn, seq_len), plan);
  Var resid = add(h_prev, attn);
  if (const auto* f = std::get_if<FaaLayerVars>(&p.adapter)) {
    resid = add(resid, mul_row(faa_adapter_forward(attn, *f, trace), f->gamma));
  } else if (const auto* a = std::get_if<BaselineAdapterVars>(&p.adapter)) {
    resid = add(resid, mul_row(baseline_adapter_forward(attn, *a), a->gamma));
  }
  Var mid = layernorm(resid, p.ln_mid.scale, p.ln_mid.shift);
  return layernorm(add(mid, feed_forward(mid, p.ffn, plan)), p.ln_out.scale, p.ln_out.shift);
}

ForwardResult model_forward(Graph& graph, Model& model, const Tensor& inputs, std::size_t seq_len,
                            const DropoutPlan& plan) {
  const std::size_t d = model.config.d_model();
  if (inputs.cols() != model.config.input_width()) {
    throw DimensionError("model_forward: inputs " + shape_str(inputs.shape()) + " vs input width " +
                         std::to_string(model.config.input_width()));
  }
  if (seq_len == 0 || seq_len > model.config.max_seq_len || inputs.rows() % seq_len != 0) {
    throw DimensionError("model_forward: " + std::to_string(inputs.rows()) + " rows do not split into sequences of " +
                         std::to_string(seq_len));
  }
  const std::size_t n_seq = inputs.rows() / seq_len;
  std::vector<double> pe(n_seq * seq_len * d);
  for (std::size_t b = 0; b < n_seq; ++b)
    for (std::size_t t = 0; t < seq_len; ++t)
      for (std::size_t j = 0; j < d; ++j) pe[(b * seq_len + t) * d + j] = model.positional.at(t, j);

  Var x = graph.constant(Tensor({inputs.rows(), inputs.cols()}, inputs.values()));
  Var h = add(linear(x, graph.param(model.embed)), graph.constant(Tensor({n_seq * seq_len, d}, std::move(pe))));

  ForwardResult result;
  for (std::size_t l = 0; l < model.blocks.size(); ++l) {
    BlockVars vars = bind(graph, model.blocks[l]);
    FaaTrace trace;
    h = block_forward(h, vars, seq_len, plan, &trace);
    if (trace.gates) {
      result.gates.push_back(*trace.gates);
      result.gate_layers.push_back(l);
      result.traces.push_back(std::move(trace));
    }
  }
  std::vector<Var> pooled;
  pooled.reserve(n_seq);
  for (std::size_t b = 0; b < n_seq; ++b) pooled.push_back(col_mean(slice_rows(h, b * seq_len, seq_len)));
  Var pool = n_seq == 1 ? pooled[0] : concat_rows(pooled);
  result.logits = linear(pool, graph.param(model.head_w), graph.param(model.head_b));
  return result;
}

GradMap collect_grads(Model& model) {
  GradMap grads;
  model.for_each_param([&](const std::string& name, Tensor& t) {
    if (!t.requires_grad()) return;
    grads[name] = t.has_grad() ? t.grad() : std::vector<double>(t.numel(), 0.0);
  });
  return grads;
}

void zero_grads(Model& model) {
  model.for_each_param([](const std::string&, Tensor& t) { t.clear_grad(); });
}

}  // namespace faa
