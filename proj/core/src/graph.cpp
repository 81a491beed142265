// SPDX-License-Identifier: Apache-2.0
#include "faa/graph.hpp"

#include "faa/errors.hpp"

namespace faa {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kMulRow: return "mul_row";
    case OpKind::kMulCol: return "mul_col";
    case OpKind::kUnary: return "unary";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kRowMean: return "row_mean";
    case OpKind::kColMean: return "col_mean";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kLayerNorm: return "layernorm";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kReshape: return "reshape";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->value(id_); }

bool Var::needs_grad() const { return graph_->needs_grad(id_); }

Var Graph::constant(Tensor value) {
  value.set_requires_grad(false);
  nodes_.push_back(Node{OpKind::kConstant, {}, std::move(value), false, nullptr, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Tensor& param) {
  Tensor copy(param.shape(), param.values());
  nodes_.push_back(Node{OpKind::kLeaf, {}, std::move(copy), param.requires_grad(), &param, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  bool needs = false;
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw ContractError("graph input id precedes no node");
    needs = needs || nodes_[in].needs_grad;
  }
  nodes_.push_back(Node{kind, std::move(inputs), std::move(value), needs, nullptr,
                        needs ? std::move(backward) : BackwardFn{}, {}});
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.numel(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw ContractError("loss does not belong to this graph");
  std::size_t root = loss.id();
  if (nodes_[root].value.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_str(nodes_[root].value.shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  if (!nodes_[root].needs_grad) return;
  grad_buffer(root)[0] = 1.0;

  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.needs_grad) continue;
    if (n.backward) n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.kind != OpKind::kLeaf || n.bound == nullptr || !n.needs_grad || n.grad.empty()) continue;
    std::vector<double>& g = n.bound->mutable_grad();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
}

}  // namespace faa
