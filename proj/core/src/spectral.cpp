// SPDX-License-Identifier: Apache-2.0
#include "faa/spectral.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "faa/errors.hpp"

namespace faa {
namespace {

struct Twiddles {
  std::vector<double> c, s;  // cos/sin(2 pi m / T), m = 0..T-1
};

Twiddles twiddles(std::size_t T) {
  Twiddles tw{std::vector<double>(T), std::vector<double>(T)};
  for (std::size_t m = 0; m < T; ++m) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(T);
    tw.c[m] = std::cos(a);
    tw.s[m] = std::sin(a);
  }
  return tw;
}

}  // namespace

SpectralSplit fourier_split(const Tensor& x, double cutoff_fraction) {
  const std::size_t T = x.rows(), d = x.cols();
  if (T < 2) throw ContractError("fourier_split: needs at least 2 time steps, got " + std::to_string(T));
  if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0)) {
    throw ContractError("fourier_split: cutoff_fraction must lie in (0, 1)");
  }
  const Twiddles tw = twiddles(T);
  const double limit = cutoff_fraction * static_cast<double>(T) / 2.0;
  std::vector<double> high(T * d, 0.0), low(T * d, 0.0);
  std::vector<double> re(T), im(T);

  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < T; ++k) {
      double a = 0.0, b = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t m = (k * t) % T;
        a += x.at(t, j) * tw.c[m];
        b -= x.at(t, j) * tw.s[m];
      }
      re[k] = a;
      im[k] = b;
    }
    for (std::size_t t = 0; t < T; ++t) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t k = 0; k < T; ++k) {
        const std::size_t m = (k * t) % T;
        // Real part of X_k e^{+i 2 pi k t / T}.
        const double v = re[k] * tw.c[m] - im[k] * tw.s[m];
        const double freq = static_cast<double>(std::min(k, T - k));
        (freq < limit ? lo : hi) += v;
      }
      low[t * d + j] = lo / static_cast<double>(T);
      high[t * d + j] = hi / static_cast<double>(T);
    }
  }
  return {Tensor(x.shape(), std::move(high)), Tensor(x.shape(), std::move(low))};
}

std::vector<double> band_energy(const Tensor& x) {
  const std::size_t T = x.rows(), d = x.cols();
  const Twiddles tw = twiddles(T);
  std::vector<double> energy(T / 2 + 1, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k <= T / 2; ++k) {
      double a = 0.0, b = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t m = (k * t) % T;
        a += x.at(t, j) * tw.c[m];
        b -= x.at(t, j) * tw.s[m];
      }
      energy[k] += a * a + b * b;
    }
  }
  return energy;
}

}  // namespace faa
