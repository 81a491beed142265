// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "faa/tensor.hpp"

namespace faa {

enum class SplitKind { kFull, kHighPass, kLowPass };

std::string_view to_string(SplitKind split);
SplitKind parse_split_kind(std::string_view text);

struct SyntheticTaskSpec {
  std::size_t n_samples = 256;
  std::size_t n_classes = 2;
  std::size_t seq_len = 16;
  std::size_t width = 64;
  /// Stddev of the i.i.d. Gaussian noise added to every element.
  double noise = 0.0;
  SplitKind split = SplitKind::kFull;
  /// Split point as a fraction of Nyquist, used when split != full.
  double cutoff = 0.5;
  /// Class frequencies are drawn from (band_lo, band_hi] as fractions of Nyquist.
  double band_lo = 0.0;
  double band_hi = 1.0;
  /// Per-column phase is drawn from U(0, 2 pi * phase_jitter); 0 aligns every
  /// sinusoid to start at its crest.
  double phase_jitter = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Each sample is a [seq_len x width] sequence whose columns are sinusoids
/// of one frequency drawn from the class's band (random amplitude and phase
/// per column), plus noise. Classes own contiguous groups of frequencies.
struct SyntheticDataset {
  SyntheticTaskSpec spec;
  std::vector<Tensor> samples;
  std::vector<std::size_t> labels;
  /// DFT bin indices assigned to each class.
  std::vector<std::vector<std::size_t>> class_frequencies;

  std::size_t size() const { return samples.size(); }
  std::size_t seq_len() const { return spec.seq_len; }
  /// Stacks the selected sequences into [B * seq_len x width].
  Tensor batch_inputs(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> batch_labels(std::span<const std::size_t> indices) const;
};

SyntheticDataset make_synthetic_task(const SyntheticTaskSpec& spec);
SyntheticDataset make_synthetic_task(std::size_t n_samples, std::size_t n_classes, double noise, SplitKind split,
                                     std::uint64_t seed);

}  // namespace faa
