// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "faa/rng.hpp"
#include "faa/tensor.hpp"

namespace faa::init {

/// U(-b, b) with b = sqrt(6 / (fan_in + fan_out)); weight stored [out x in].
Tensor xavier_uniform(std::size_t out, std::size_t in, Rng& rng, bool requires_grad = true);
Tensor xavier_uniform_vector(std::size_t n, Rng& rng, bool requires_grad = true);
Tensor gaussian(Shape shape, double stddev, Rng& rng, bool requires_grad = false);
Tensor uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad = false);

}  // namespace faa::init
