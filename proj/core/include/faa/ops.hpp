// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "faa/graph.hpp"

namespace faa {

// Differentiable primitives. Matrices are row-major [rows x cols]; a 1-D
// tensor of length d behaves as a single row. Every op records its backward
// rule on the graph that owns its inputs.

Var matmul(Var a, Var b);     // a[m x k] * b[k x n]
Var matmul_nt(Var a, Var b);  // a[m x k] * b[n x k]^T
/// x * W^T (+ bias): the usual affine map with W stored [out x in].
Var linear(Var x, Var weight);
Var linear(Var x, Var weight, Var bias);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // Hadamard
Var scale(Var x, double factor);

Var add_row(Var x, Var row);  // x[N x d] + row[d], broadcast over rows
Var mul_row(Var x, Var row);  // x[N x d] * row[d], broadcast over rows
Var mul_col(Var x, Var col);  // x[N x d] * col[N x 1], broadcast over columns

enum class UnaryKind { kCos, kSin, kGelu, kSigmoid, kAbs };

Var unary(Var x, UnaryKind kind);
inline Var cos(Var x) { return unary(x, UnaryKind::kCos); }
inline Var sin(Var x) { return unary(x, UnaryKind::kSin); }
inline Var gelu(Var x) { return unary(x, UnaryKind::kGelu); }
inline Var sigmoid(Var x) { return unary(x, UnaryKind::kSigmoid); }
inline Var abs(Var x) { return unary(x, UnaryKind::kAbs); }

/// Scalar GELU, tanh approximation.
double gelu_value(double x);
double gelu_derivative(double x);

Var sum(Var x);
Var mean(Var x);
Var row_sum(Var x);   // [N x d] -> [N x 1]
Var row_mean(Var x);  // [N x d] -> [N x 1]
Var col_mean(Var x);  // [N x d] -> [1 x d]

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var slice_rows(Var x, std::size_t start, std::size_t count);
Var reshape(Var x, Shape shape);

inline constexpr double kLayerNormEps = 1e-5;

/// Zero-mean, unit-variance normalization over the last axis.
Var layernorm(Var x, double eps = kLayerNormEps);
/// Same, followed by a per-feature affine map (scale, shift of length d).
Var layernorm(Var x, Var scale, Var shift, double eps = kLayerNormEps);

Var softmax_rows(Var x);
/// Mean softmax cross-entropy of logits[B x C] against integer labels.
Var cross_entropy(Var logits, std::span<const std::size_t> labels);

namespace debug {
/// Multiplies the GELU backward rule by `factor`. Anything other than 1.0
/// produces wrong gradients; used by negative-control tests of the checker.
void set_gelu_derivative_scale(double factor);
double gelu_derivative_scale();
}  // namespace debug

}  // namespace faa
