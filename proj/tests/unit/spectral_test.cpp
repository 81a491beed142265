// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "faa/errors.hpp"
#include "faa/spectral.hpp"
#include "test_support.hpp"

namespace faa {
namespace {

using test::random_tensor;

// Reference low-pass through FFTW: keep r2c bins k with k < cutoff * T / 2,
// transform back and normalise.
std::vector<double> fftw_lowpass(const std::vector<double>& column, double cutoff) {
  const int T = static_cast<int>(column.size());
  std::vector<double> in = column, out(T);
  std::vector<fftw_complex> spec(T / 2 + 1);
  fftw_plan fwd = fftw_plan_dft_r2c_1d(T, in.data(), spec.data(), FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  const double limit = cutoff * T / 2.0;
  for (int k = 0; k <= T / 2; ++k) {
    if (!(k < limit)) spec[k][0] = spec[k][1] = 0.0;
  }
  fftw_plan inv = fftw_plan_dft_c2r_1d(T, spec.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);
  for (double& v : out) v /= T;
  return out;
}

std::vector<double> column(const Tensor& x, std::size_t c) {
  std::vector<double> out(x.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) out[t] = x.at(t, c);
  return out;
}

TEST(FourierSplit, ConstantSequenceIsAllLow) {
  const Tensor x = Tensor::full({8, 3}, 2.5);
  const SpectralSplit s = fourier_split(x, 0.5);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(s.low[i], 2.5, 1e-12);
    EXPECT_NEAR(s.high[i], 0.0, 1e-12);
  }
}

TEST(FourierSplit, AlternatingSequenceIsAllHigh) {
  for (std::size_t T : {2u, 8u, 16u}) {
    std::vector<double> v(T);
    for (std::size_t t = 0; t < T; ++t) v[t] = t % 2 == 0 ? 1.0 : -1.0;
    const Tensor x({T, 1}, v);
    const SpectralSplit s = fourier_split(x, 0.9);
    for (std::size_t i = 0; i < T; ++i) {
      EXPECT_NEAR(s.high[i], v[i], 1e-12);
      EXPECT_NEAR(s.low[i], 0.0, 1e-12);
    }
  }
}

TEST(FourierSplit, RandomSequenceReconstructs) {
  Rng rng(1);
  const Tensor x = random_tensor({8, 5}, rng, -3, 3, false);
  const SpectralSplit s = fourier_split(x, 0.5);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(s.high[i] + s.low[i], x[i], 1e-10);
}

TEST(FourierSplit, ExactForEveryLengthUpTo64) {
  Rng rng(2);
  for (std::size_t T = 2; T <= 64; ++T) {
    const Tensor x = random_tensor({T, 3}, rng, -5, 5, false);
    const SpectralSplit s = fourier_split(x, rng.uniform(0.05, 0.95));
    for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_NEAR(s.high[i] + s.low[i], x[i], 1e-10) << "T=" << T;
  }
}

TEST(FourierSplit, MatchesFftwReference) {
  Rng rng(3);
  for (std::size_t T : {2u, 3u, 7u, 8u, 16u, 31u, 64u}) {
    for (double cutoff : {0.1, 0.5, 0.75}) {
      const Tensor x = random_tensor({T, 4}, rng, -1, 1, false);
      const SpectralSplit s = fourier_split(x, cutoff);
      for (std::size_t c = 0; c < 4; ++c) {
        const std::vector<double> low = fftw_lowpass(column(x, c), cutoff);
        for (std::size_t t = 0; t < T; ++t) {
          EXPECT_NEAR(s.low.at(t, c), low[t], 1e-10) << "T=" << T << " cutoff=" << cutoff;
        }
      }
    }
  }
}

TEST(FourierSplit, ProjectionsAreIdempotentAndOrthogonal) {
  Rng rng(4);
  const Tensor x = random_tensor({16, 2}, rng, -1, 1, false);
  const SpectralSplit s = fourier_split(x, 0.5);
  const SpectralSplit again = fourier_split(s.low, 0.5);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(again.low[i], s.low[i], 1e-12);
    EXPECT_NEAR(again.high[i], 0.0, 1e-12);
    dot += s.low[i] * s.high[i];
  }
  EXPECT_NEAR(dot, 0.0, 1e-10);
}

TEST(FourierSplit, Contract) {
  EXPECT_THROW(fourier_split(Tensor::zeros({1, 3}), 0.5), ContractError);
  EXPECT_THROW(fourier_split(Tensor::zeros({4, 3}), 0.0), ContractError);
  EXPECT_THROW(fourier_split(Tensor::zeros({4, 3}), 1.0), ContractError);
}

TEST(BandEnergy, MatchesFftw) {
  Rng rng(5);
  const std::size_t T = 12;
  const Tensor x = random_tensor({T, 3}, rng, -1, 1, false);
  const std::vector<double> e = band_energy(x);
  ASSERT_EQ(e.size(), T / 2 + 1);
  std::vector<double> expected(T / 2 + 1, 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> in = column(x, c);
    std::vector<fftw_complex> spec(T / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(T), in.data(), spec.data(), FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    for (std::size_t k = 0; k <= T / 2; ++k) expected[k] += spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
  }
  for (std::size_t k = 0; k <= T / 2; ++k) EXPECT_NEAR(e[k], expected[k], 1e-10);
}

TEST(BandEnergy, PureToneLandsInItsBin) {
  const std::size_t T = 16;
  std::vector<double> v(T);
  for (std::size_t t = 0; t < T; ++t) v[t] = std::cos(2.0 * std::numbers::pi * 3.0 * t / T);
  const std::vector<double> e = band_energy(Tensor({T, 1}, v));
  for (std::size_t k = 0; k < e.size(); ++k) {
    EXPECT_NEAR(e[k], k == 3 ? 64.0 : 0.0, 1e-9);  // (T/2)^2 in bin 3
  }
}

}  // namespace
}  // namespace faa
