// SPDX-License-Identifier: Apache-2.0
#include "faa/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "faa/errors.hpp"
#include "faa/rng.hpp"
#include "faa/spectral.hpp"

namespace faa {

std::string_view to_string(SplitKind split) {
  switch (split) {
    case SplitKind::kFull: return "full";
    case SplitKind::kHighPass: return "high_pass";
    case SplitKind::kLowPass: return "low_pass";
  }
  return "full";
}

SplitKind parse_split_kind(std::string_view text) {
  if (text == "full") return SplitKind::kFull;
  if (text == "high_pass" || text == "high") return SplitKind::kHighPass;
  if (text == "low_pass" || text == "low") return SplitKind::kLowPass;
  throw ConfigError("unknown split '" + std::string(text) + "' (expected full, high_pass or low_pass)");
}

namespace {

std::vector<std::size_t> band_bins(const SyntheticTaskSpec& spec) {
  const double nyquist = static_cast<double>(spec.seq_len / 2);
  std::vector<std::size_t> bins;
  for (std::size_t k = 1; k <= spec.seq_len / 2; ++k) {
    const double f = static_cast<double>(k) / nyquist;
    if (f > spec.band_lo && f <= spec.band_hi) bins.push_back(k);
  }
  return bins;
}

}  // namespace

void SyntheticTaskSpec::validate() const {
  if (n_classes < 2) throw ConfigError("task.n_classes must be at least 2");
  if (n_samples == 0) throw ConfigError("task.n_samples must be positive");
  if (seq_len < 2) throw ConfigError("task.seq_len must be at least 2");
  if (width == 0) throw ConfigError("task.width must be positive");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("task.noise must be a finite value >= 0");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw ConfigError("task.cutoff must lie in (0, 1)");
  if (!(band_lo >= 0.0 && band_lo < band_hi && band_hi <= 1.0)) {
    throw ConfigError("task band must satisfy 0 <= band_lo < band_hi <= 1");
  }
  if (!(phase_jitter >= 0.0 && phase_jitter <= 1.0)) throw ConfigError("task.phase_jitter must lie in [0, 1]");
  const std::size_t bins = band_bins(*this).size();
  if (bins < n_classes) {
    throw ConfigError("task band holds " + std::to_string(bins) + " frequencies, fewer than n_classes=" +
                      std::to_string(n_classes));
  }
}

Tensor SyntheticDataset::batch_inputs(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ContractError("batch_inputs: empty batch");
  const std::size_t T = spec.seq_len, w = spec.width;
  std::vector<double> out;
  out.reserve(indices.size() * T * w);
  for (std::size_t i : indices) {
    if (i >= samples.size()) throw ContractError("batch_inputs: sample index out of range");
    const auto d = samples[i].data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return Tensor({indices.size() * T, w}, std::move(out));
}

std::vector<std::size_t> SyntheticDataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

SyntheticDataset make_synthetic_task(const SyntheticTaskSpec& spec) {
  spec.validate();
  SyntheticDataset ds;
  ds.spec = spec;

  const std::vector<std::size_t> bins = band_bins(spec);
  const std::size_t C = spec.n_classes;
  ds.class_frequencies.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t lo = c * bins.size() / C, hi = (c + 1) * bins.size() / C;
    ds.class_frequencies[c].assign(bins.begin() + static_cast<std::ptrdiff_t>(lo),
                                   bins.begin() + static_cast<std::ptrdiff_t>(hi));
  }

  // Balanced labels, then a Fisher-Yates shuffle.
  const Rng root(spec.seed, "synthetic");
  ds.labels.resize(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) ds.labels[i] = i % C;
  Rng order = root.substream("order");
  for (std::size_t i = spec.n_samples; i > 1; --i) {
    std::swap(ds.labels[i - 1], ds.labels[order.below(i)]);
  }

  const std::size_t T = spec.seq_len, w = spec.width;
  ds.samples.reserve(spec.n_samples);
  for (std::size_t s = 0; s < spec.n_samples; ++s) {
    Rng rng = root.substream("sample", s);
    const auto& freqs = ds.class_frequencies[ds.labels[s]];
    const double k = static_cast<double>(freqs[rng.below(freqs.size())]);
    std::vector<double> x(T * w);
    for (std::size_t j = 0; j < w; ++j) {
      const double amp = rng.uniform(0.5, 1.5);
      const double phase = 2.0 * std::numbers::pi * spec.phase_jitter * rng.uniform();
      for (std::size_t t = 0; t < T; ++t) {
        x[t * w + j] = amp * std::cos(2.0 * std::numbers::pi * k * static_cast<double>(t) / static_cast<double>(T) + phase);
      }
    }
    if (spec.noise > 0.0) {
      for (double& v : x) v += spec.noise * rng.normal();
    }
    Tensor sample({T, w}, std::move(x));
    if (spec.split != SplitKind::kFull) {
      SpectralSplit parts = fourier_split(sample, spec.cutoff);
      sample = spec.split == SplitKind::kHighPass ? std::move(parts.high) : std::move(parts.low);
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

SyntheticDataset make_synthetic_task(std::size_t n_samples, std::size_t n_classes, double noise, SplitKind split,
                                     std::uint64_t seed) {
  SyntheticTaskSpec spec;
  spec.n_samples = n_samples;
  spec.n_classes = n_classes;
  spec.noise = noise;
  spec.split = split;
  spec.seed = seed;
  return make_synthetic_task(spec);
}

}  // namespace faa
