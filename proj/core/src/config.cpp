// SPDX-License-Identifier: Apache-2.0
#include "faa/config.hpp"

#include <algorithm>

#include "faa/errors.hpp"

namespace faa {

bool FaaConfig::inserted_at(std::size_t layer) const {
  return std::find(insertion_layers.begin(), insertion_layers.end(), layer) != insertion_layers.end();
}

RegWeights FaaConfig::reg_weights() const {
  if (ablation.no_gating || adapter == AdapterKind::kBaseline || mode == ActivationMode::kSimple) {
    return {0.0, 0.0};
  }
  return {lambda1, lambda2};
}

void FaaConfig::validate() const {
  if (d_model < 1) throw ConfigError("faa.d_model must be >= 1");
  if (bottleneck < 1) throw ConfigError("faa.bottleneck must be >= 1");
  if (num_grids < 1) throw ConfigError("faa.num_grids must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("faa.sigma must be > 0");
  if (!(lambda1 >= 0.0)) throw ConfigError("faa.lambda1 must be >= 0");
  if (!(lambda2 >= 0.0)) throw ConfigError("faa.lambda2 must be >= 0");
  std::vector<std::size_t> sorted = insertion_layers;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("faa.insertion_layers contains duplicates");
  }
  if (ablation.static_gates && ablation.no_gating) {
    throw ConfigError("faa.ablation: static_gates and no_gating are mutually exclusive");
  }
}

std::string_view to_string(ActivationMode mode) { return mode == ActivationMode::kGated ? "gated" : "simple"; }

std::string_view to_string(AdapterKind kind) { return kind == AdapterKind::kFaa ? "faa" : "baseline"; }

ActivationMode parse_activation_mode(std::string_view text) {
  if (text == "gated") return ActivationMode::kGated;
  if (text == "simple") return ActivationMode::kSimple;
  throw ConfigError("faa.mode: expected \"gated\" or \"simple\", got \"" + std::string(text) + "\"");
}

AdapterKind parse_adapter_kind(std::string_view text) {
  if (text == "faa") return AdapterKind::kFaa;
  if (text == "baseline") return AdapterKind::kBaseline;
  throw ConfigError("faa.adapter: expected \"faa\" or \"baseline\", got \"" + std::string(text) + "\"");
}

}  // namespace faa
