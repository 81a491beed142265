// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fftw3.h>

#include <cmath>

#include "faa/errors.hpp"
#include "faa/spectral.hpp"
#include "faa/synthetic.hpp"

namespace faa {
namespace {

// Per-bin DFT magnitudes summed over columns, via FFTW.
std::vector<double> dft_magnitudes(const Tensor& x) {
  const int T = static_cast<int>(x.rows());
  std::vector<double> mags(T / 2 + 1, 0.0), in(T);
  std::vector<fftw_complex> spec(T / 2 + 1);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (int t = 0; t < T; ++t) in[t] = x.at(t, c);
    fftw_plan p = fftw_plan_dft_r2c_1d(T, in.data(), spec.data(), FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    for (int k = 0; k <= T / 2; ++k) mags[k] += std::hypot(spec[k][0], spec[k][1]);
  }
  return mags;
}

double energy(const Tensor& x) {
  double e = 0.0;
  for (double v : x.values()) e += v * v;
  return e;
}

TEST(SyntheticTask, NoiseFreeTwoClassIsLinearlySeparableOnDftMagnitudes) {
  const SyntheticDataset ds = make_synthetic_task(200, 2, 0.0, SplitKind::kFull, 5);
  // Nearest-centroid probe: the decision rule is linear in the features.
  std::vector<std::vector<double>> feats;
  for (const Tensor& s : ds.samples) feats.push_back(dft_magnitudes(s));
  const std::size_t K = feats[0].size();
  std::vector<std::vector<double>> centroid(2, std::vector<double>(K, 0.0));
  std::vector<double> count(2, 0.0);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) centroid[ds.labels[i]][k] += feats[i][k];
    count[ds.labels[i]] += 1;
  }
  for (std::size_t c = 0; c < 2; ++c)
    for (double& v : centroid[c]) v /= count[c];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    double d[2] = {0, 0};
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t k = 0; k < K; ++k) d[c] += (feats[i][k] - centroid[c][k]) * (feats[i][k] - centroid[c][k]);
    correct += (d[1] < d[0] ? 1u : 0u) == ds.labels[i];
  }
  EXPECT_EQ(correct, feats.size());
}

TEST(SyntheticTask, SameSeedBitwiseIdentical) {
  SyntheticTaskSpec spec;
  spec.n_samples = 40;
  spec.n_classes = 3;
  spec.noise = 0.2;
  spec.width = 8;
  spec.seed = 17;
  const SyntheticDataset a = make_synthetic_task(spec), b = make_synthetic_task(spec);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a.samples[i].bitwise_equal(b.samples[i]));
  spec.seed = 18;
  const SyntheticDataset c = make_synthetic_task(spec);
  EXPECT_FALSE(c.samples[0].bitwise_equal(a.samples[0]));
}

TEST(SyntheticTask, ClassBalanced) {
  for (std::size_t C : {2u, 3u, 4u}) {
    const SyntheticDataset ds = make_synthetic_task(101, C, 0.1, SplitKind::kFull, C);
    std::vector<std::size_t> counts(C, 0);
    for (std::size_t l : ds.labels) ++counts[l];
    for (std::size_t n : counts) {
      EXPECT_GE(n, 101 / C);
      EXPECT_LE(n, 101 / C + 1);
    }
  }
}

TEST(SyntheticTask, ClassesOwnDisjointContiguousBins) {
  const SyntheticDataset ds = make_synthetic_task(30, 3, 0.0, SplitKind::kFull, 2);
  std::size_t last = 0;
  for (const auto& bins : ds.class_frequencies) {
    ASSERT_FALSE(bins.empty());
    EXPECT_GT(bins.front(), last);
    for (std::size_t i = 1; i < bins.size(); ++i) EXPECT_EQ(bins[i], bins[i - 1] + 1);
    last = bins.back();
  }
}

TEST(SyntheticTask, HighPassRemovesLowBandClass) {
  SyntheticTaskSpec spec;
  spec.n_samples = 64;
  spec.n_classes = 2;
  spec.width = 8;
  spec.noise = 0.05;
  spec.cutoff = 0.6;  // class 0 owns bins 1..4 of 8, all below 0.6 * 8
  spec.seed = 3;
  const SyntheticDataset full = make_synthetic_task(spec);
  spec.split = SplitKind::kHighPass;
  const SyntheticDataset high = make_synthetic_task(spec);
  ASSERT_EQ(full.class_frequencies[0].back(), 4u);
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.labels[i] != 0) continue;
    EXPECT_LT(energy(high.samples[i]) / energy(full.samples[i]), 0.05);
  }
}

TEST(SyntheticTask, HighAndLowSplitsPartitionTheSignal) {
  SyntheticTaskSpec spec;
  spec.n_samples = 10;
  spec.width = 4;
  spec.noise = 0.3;
  spec.seed = 9;
  const SyntheticDataset full = make_synthetic_task(spec);
  spec.split = SplitKind::kHighPass;
  const SyntheticDataset high = make_synthetic_task(spec);
  spec.split = SplitKind::kLowPass;
  const SyntheticDataset low = make_synthetic_task(spec);
  for (std::size_t i = 0; i < full.size(); ++i) {
    for (std::size_t j = 0; j < full.samples[i].numel(); ++j) {
      EXPECT_NEAR(high.samples[i][j] + low.samples[i][j], full.samples[i][j], 1e-10);
    }
    EXPECT_NEAR(energy(high.samples[i]) + energy(low.samples[i]), energy(full.samples[i]), 1e-9);
  }
}

TEST(SyntheticTask, PhaseAlignedSamplesStartAtCrest) {
  SyntheticTaskSpec spec;
  spec.n_samples = 6;
  spec.width = 5;
  spec.phase_jitter = 0.0;
  spec.seed = 4;
  const SyntheticDataset ds = make_synthetic_task(spec);
  for (const Tensor& s : ds.samples)
    for (std::size_t c = 0; c < s.cols(); ++c) EXPECT_GT(s.at(0, c), 0.0);
}

TEST(SyntheticTask, BatchStacksSequences) {
  const SyntheticDataset ds = make_synthetic_task(8, 2, 0.1, SplitKind::kFull, 1);
  const std::vector<std::size_t> idx = {5, 2};
  const Tensor b = ds.batch_inputs(idx);
  EXPECT_EQ(b.shape(), (Shape{2 * ds.seq_len(), ds.spec.width}));
  for (std::size_t j = 0; j < ds.samples[2].numel(); ++j) EXPECT_EQ(b[ds.samples[5].numel() + j], ds.samples[2][j]);
  EXPECT_EQ(ds.batch_labels(idx), (std::vector<std::size_t>{ds.labels[5], ds.labels[2]}));
  EXPECT_THROW(ds.batch_inputs(std::vector<std::size_t>{8}), ContractError);
}

TEST(SyntheticTask, Validation) {
  EXPECT_THROW(make_synthetic_task(10, 1, 0.0, SplitKind::kFull, 1), ConfigError);
  SyntheticTaskSpec spec;
  spec.seq_len = 4;
  spec.n_classes = 3;  // only 2 bins in (0, 1] at T = 4
  EXPECT_THROW(make_synthetic_task(spec), ConfigError);
  spec = {};
  spec.noise = -1;
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_EQ(parse_split_kind("high"), SplitKind::kHighPass);
  EXPECT_EQ(parse_split_kind("low_pass"), SplitKind::kLowPass);
  EXPECT_THROW(parse_split_kind("band"), ConfigError);
}

}  // namespace
}  // namespace faa
