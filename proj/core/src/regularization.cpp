// SPDX-License-Identifier: Apache-2.0
#include "faa/regularization.hpp"

#include <optional>
#include <vector>

#include "faa/errors.hpp"
#include "faa/ops.hpp"

namespace faa {

Var freq_regularizer(Graph& graph, std::span<const Var> layer_gates, const RegWeights& weights) {
  if (weights.lambda1 < 0.0 || weights.lambda2 < 0.0) throw ContractError("freq_regularizer: negative weight");
  std::optional<Var> total;
  auto accumulate = [&](Var term) { total = total ? add(*total, term) : term; };

  for (const Var& r : layer_gates) {
    if (r.graph() != &graph) throw ContractError("freq_regularizer: gates belong to another graph");
    const std::size_t n = r.cols();
    if (weights.lambda1 > 0.0) accumulate(scale(mean(row_sum(abs(r))), weights.lambda1));
    if (weights.lambda2 > 0.0 && n > 1) {
      std::vector<Var> cols;
      cols.reserve(n);
      for (std::size_t i = 0; i < n; ++i) cols.push_back(slice_cols(r, i, 1));
      std::vector<Var> pairs;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          Var prod = mul(cols[i], cols[j]);
          pairs.push_back(mul(prod, prod));
        }
      accumulate(scale(mean(row_sum(concat_cols(pairs))), weights.lambda2));
    }
  }
  if (!total) return graph.constant(Tensor::scalar(0.0));
  return *total;
}

Var total_loss(Var task, Var freq) {
  if (task.value().numel() != 1 || freq.value().numel() != 1) {
    throw ContractError("total_loss: both terms must be scalar, got " + shape_str(task.shape()) + " and " +
                        shape_str(freq.shape()));
  }
  if (task.shape() != freq.shape()) return add(task, reshape(freq, task.shape()));
  return add(task, freq);
}

}  // namespace faa
