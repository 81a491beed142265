// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "faa/tensor.hpp"

namespace faa {

class Graph;

enum class OpKind {
  kLeaf,
  kConstant,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRow,
  kMulRow,
  kMulCol,
  kUnary,
  kSum,
  kMean,
  kRowSum,
  kRowMean,
  kColMean,
  kConcatCols,
  kConcatRows,
  kSliceCols,
  kSliceRows,
  kLayerNorm,
  kSoftmaxRows,
  kCrossEntropy,
  kReshape,
};

std::string_view op_name(OpKind kind);

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool needs_grad() const;
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Dynamic reverse-mode tape. Nodes are appended in construction order, so
/// every input id precedes its consumer and the graph is acyclic by
/// construction. backward() walks the nodes in exact reverse order.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Non-differentiable input.
  Var constant(Tensor value);
  /// Binds a parameter tensor. If it requires grad, backward() accumulates
  /// into param.mutable_grad(). The tensor must outlive the graph.
  Var param(Tensor& param);

  /// Populates gradients on every requires_grad leaf. Repeated calls
  /// accumulate into the bound parameters again.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  /// Gradient of the last backward() with respect to node `id` (empty if the
  /// node does not participate in differentiation).
  std::span<const double> node_grad(std::size_t id) const { return nodes_[id].grad; }

  // Op-author interface.
  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);
  std::vector<double>& grad_buffer(std::size_t id);
  const std::vector<double>& out_grad(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool needs_grad = false;
    Tensor* bound = nullptr;
    BackwardFn backward;
    std::vector<double> grad;
  };

  std::vector<Node> nodes_;
};

}  // namespace faa
