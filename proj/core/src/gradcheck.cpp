// SPDX-License-Identifier: Apache-2.0
#include "faa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "faa/errors.hpp"

namespace faa {
namespace {

double checked(double v, std::size_t coord) {
  if (!std::isfinite(v)) {
    throw NumericalError("finite-difference oracle: non-finite function value at coordinate " +
                         std::to_string(coord));
  }
  return v;
}

}  // namespace

std::vector<double> finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& params,
                                     double h) {
  if (h <= 0.0) throw ContractError("finite_diff_grad: step must be positive");
  Tensor probe(params.shape(), params.values());
  std::vector<double> out(params.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = checked(f(probe), i);
    probe[i] = orig - h;
    const double down = checked(f(probe), i);
    probe[i] = orig;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

std::vector<double> finite_diff_grad_inplace(Tensor& param, const std::function<double()>& f,
                                             std::span<const std::size_t> coords, double h) {
  if (h <= 0.0) throw ContractError("finite_diff_grad: step must be positive");
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(param.numel());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    coords = all;
  }
  std::vector<double> out;
  out.reserve(coords.size());
  for (std::size_t i : coords) {
    const double orig = param[i];
    param[i] = orig + h;
    const double up = f();
    param[i] = orig - h;
    const double down = f();
    param[i] = orig;
    out.push_back((checked(up, i) - checked(down, i)) / (2.0 * h));
  }
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor) {
  if (analytic.size() != numeric.size()) throw DimensionError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  }
  return worst;
}

double global_norm(const GradMap& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g) s += v * v;
  return std::sqrt(s);
}

GradMap clip_global_norm(GradMap grads, double max_norm) {
  if (max_norm <= 0.0) throw ContractError("clip_global_norm: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& v : g) v *= f;
  }
  return grads;
}

}  // namespace faa
