// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "faa/tensor.hpp"

namespace faa {

struct SpectralSplit {
  Tensor high;
  Tensor low;
};

/// Splits each column of x[T x d] along the sequence axis with a real DFT.
/// Coefficient k has frequency index min(k, T - k); indices below
/// cutoff_fraction * T / 2 reconstruct `low`, the rest reconstruct `high`.
/// Requires T >= 2 and 0 < cutoff_fraction < 1.
SpectralSplit fourier_split(const Tensor& x, double cutoff_fraction);

/// Squared DFT magnitude per frequency index 0..T/2, summed over columns.
std::vector<double> band_energy(const Tensor& x);

}  // namespace faa
