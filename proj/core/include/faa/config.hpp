// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace faa {

/// gated: frequency channels with adaptive gates feed the Fourier branch.
/// simple: a single dual-channel random Fourier feature map feeds it.
enum class ActivationMode { kGated, kSimple };

/// kFaa: Fourier-activated adapter. kBaseline: down/GELU/up adapter.
enum class AdapterKind { kFaa, kBaseline };

struct AblationFlags {
  /// alpha = beta = 1, not trainable.
  bool fixed_fusion = false;
  /// Gates are a free learnable vector instead of the input-conditioned gate.
  bool static_gates = false;
  /// Random projections (W_rff / channel_W) become trainable.
  bool unfreeze_rff = false;
  /// Gates pinned at 1 and the frequency regularizer dropped.
  bool no_gating = false;

  bool any() const { return fixed_fusion || static_gates || unfreeze_rff || no_gating; }
  bool operator==(const AblationFlags&) const = default;
};

struct RegWeights {
  double lambda1 = 1e-4;
  double lambda2 = 1e-4;
};

struct FaaConfig {
  std::size_t d_model = 64;
  std::size_t bottleneck = 16;
  /// 0 selects 2 * bottleneck.
  std::size_t rff_dim = 0;
  double sigma = 1.0;
  std::size_t num_grids = 9;
  double lambda1 = 1e-4;
  double lambda2 = 1e-4;
  std::vector<std::size_t> insertion_layers;
  ActivationMode mode = ActivationMode::kGated;
  AdapterKind adapter = AdapterKind::kFaa;
  AblationFlags ablation;
  std::uint64_t seed = 0;

  std::size_t effective_rff_dim() const { return rff_dim == 0 ? 2 * bottleneck : rff_dim; }
  bool inserted_at(std::size_t layer) const;
  /// Regularizer strengths actually in force (zero when gating is removed).
  RegWeights reg_weights() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

std::string_view to_string(ActivationMode mode);
std::string_view to_string(AdapterKind kind);
ActivationMode parse_activation_mode(std::string_view text);
AdapterKind parse_adapter_kind(std::string_view text);

}  // namespace faa
