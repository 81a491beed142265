// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace faa {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Counter-based generator: the i-th draw is a fixed mixing function of
/// (key, i), so streams are reproducible across platforms and independent
/// substreams are derived by label instead of by draw order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::string_view label = "root");

  /// Independent stream keyed by this stream's key and `label`.
  Rng substream(std::string_view label) const;
  Rng substream(std::string_view label, std::uint64_t index) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one value per call).
  double normal();
  double normal(double mean, double stddev);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace faa
