// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "faa/config.hpp"
#include "faa/graph.hpp"

namespace faa {

/// Frequency regularizer over the gates of every insertion layer:
///   sum_l ( lambda1 * sum_i |r_i| + lambda2 * sum_{i<j} (r_i r_j)^2 ).
/// Each layer's gates are [N x n] (one row per token); the per-row penalty
/// is averaged over the N rows. Returns a scalar node of `graph`.
Var freq_regularizer(Graph& graph, std::span<const Var> layer_gates, const RegWeights& weights);

/// task + freq, both scalar.
Var total_loss(Var task, Var freq);

}  // namespace faa
