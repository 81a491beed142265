// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faa/run_config.hpp"
#include "faa/training.hpp"
#include "faa/transformer.hpp"

namespace faa {

struct LayerFrequency {
  std::size_t layer = 0;
  /// Batch mean of |r_i| * ||LayerNorm(g_i)||_2 per grid.
  std::vector<double> norms;
  /// Batch mean of r_i per grid.
  std::vector<double> gates;
};

struct FrequencyReport {
  std::size_t num_grids = 0;
  std::vector<LayerFrequency> layers;
  std::size_t rows = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string split;
};

/// Runs `inputs` ([B * seq_len x d_input]) through the model without dropout
/// and collects per-channel contributions at every gated insertion layer.
/// Per-row values are sorted before summing, so the result does not depend
/// on the order of sequences in the batch. Throws ContractError if the model
/// has no gated FAA layer.
FrequencyReport frequency_report(Model& model, const Tensor& inputs, std::size_t seq_len);

/// CSV: header "layer,grid_0,...,grid_{n-1}", one row of norms per layer.
std::string heatmap_csv(const FrequencyReport& report);
nlohmann::json to_json(const FrequencyReport& report);
/// Writes <path_prefix>.csv and <path_prefix>.json.
void export_reports(const FrequencyReport& report, const std::string& path_prefix);

/// "<study>_<variant>_<seed>"
std::string artifact_stem(std::string_view study, std::string_view variant, std::uint64_t seed);

enum class AblationKind { kOriginal, kNoFreqActivation, kStaticGates, kUnfreezeRff, kNoGatingL1, kNumGrids };

struct AblationVariant {
  AblationKind kind = AblationKind::kOriginal;
  /// Only for kNumGrids; 0 means the whole sweep.
  std::size_t num_grids = 0;

  std::string id() const;
  bool operator==(const AblationVariant&) const = default;
};

/// original, no_freq_activation, static_gates, unfreeze_rff, no_gating_l1,
/// num_grids (sweep) or num_grids=K. Throws ConfigError on anything else.
AblationVariant parse_ablation_variant(std::string_view text);
/// original followed by the five ablations.
std::vector<AblationVariant> default_ablation_variants();
const std::vector<std::size_t>& num_grids_sweep_values();

/// The base config with exactly one mechanism changed.
RunConfig apply_variant(const RunConfig& base, const AblationVariant& variant);

struct AblationResult {
  std::string variant;
  /// Held-out accuracy when an eval set is configured, else training accuracy.
  double metric = 0.0;
  std::size_t trainable_params = 0;
  /// metric - original metric.
  double delta = 0.0;
  std::string config_hash;
  std::string study_hash;
  TrainReport report;
};

/// Builds, trains and scores one fixed variant (not the sweep).
AblationResult run_ablation(const AblationVariant& variant, const RunConfig& base);

struct AblationStudy {
  /// One row per requested variant; the sweep contributes its best value.
  std::vector<AblationResult> rows;
  /// Per-value rows when the num_grids sweep was requested.
  std::vector<AblationResult> sweep;
};

/// Runs each requested variant on identical data and schedule. The original
/// is always trained so deltas are defined.
AblationStudy run_ablation_study(const std::vector<AblationVariant>& variants, const RunConfig& base);

/// "variant,metric,trainable_params,delta"
std::string ablation_csv(const std::vector<AblationResult>& rows);
nlohmann::json to_json(const AblationStudy& study);

}  // namespace faa
