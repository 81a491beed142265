// SPDX-License-Identifier: Apache-2.0
#include "faa/init.hpp"

#include <cmath>

namespace faa::init {

Tensor xavier_uniform(std::size_t out, std::size_t in, Rng& rng, bool requires_grad) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> data(out * in);
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor({out, in}, std::move(data), requires_grad);
}

Tensor xavier_uniform_vector(std::size_t n, Rng& rng, bool requires_grad) {
  // A length-n vector as a [n x 1] map: fan_in 1, fan_out n.
  const double bound = std::sqrt(6.0 / static_cast<double>(n + 1));
  std::vector<double> data(n);
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor({n}, std::move(data), requires_grad);
}

Tensor gaussian(Shape shape, double stddev, Rng& rng, bool requires_grad) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.normal(0.0, stddev);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

}  // namespace faa::init
