// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "faa/tensor.hpp"

namespace faa {

/// Named gradients, keyed by parameter name. Ordered so reductions over the
/// map are deterministic.
using GradMap = std::map<std::string, std::vector<double>>;

inline constexpr double kFiniteDiffStep = 1e-5;

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
/// Throws NumericalError if f returns a non-finite value.
std::vector<double> finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& params,
                                     double h = kFiniteDiffStep);

/// Same oracle, perturbing `param` in place and restoring it afterwards.
/// `coords` selects coordinates; empty means all of them.
std::vector<double> finite_diff_grad_inplace(Tensor& param, const std::function<double()>& f,
                                             std::span<const std::size_t> coords = {},
                                             double h = kFiniteDiffStep);

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// being judged on round-off alone.
double relative_error(double analytic, double numeric, double floor = 1e-3);
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor = 1e-3);

double global_norm(const GradMap& grads);
/// Rescales every gradient by max_norm / norm when the global L2 norm exceeds max_norm.
GradMap clip_global_norm(GradMap grads, double max_norm);

}  // namespace faa
