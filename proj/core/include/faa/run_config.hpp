// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "faa/synthetic.hpp"
#include "faa/training.hpp"
#include "faa/transformer.hpp"

namespace faa {

struct GradcheckSettings {
  double tolerance = 1e-5;
  double step = 1e-5;
  std::size_t batch = 2;
  std::size_t seq_len = 3;
};

/// Everything a run needs, loaded from one JSON document. Every random
/// stream is derived from `seed`; the per-module seed fields are overwritten
/// by `derive_seeds`.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string study = "study";
  std::string out_dir = "runs";
  ModelConfig model;
  TrainConfig train;
  SyntheticTaskSpec task;
  /// Held-out samples generated from an independent stream; 0 disables.
  std::size_t eval_samples = 256;
  GradcheckSettings gradcheck;

  RunConfig();
  /// Propagates `seed` and the task shape into the nested configs.
  void derive_seeds();
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys and wrong types throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& doc);
/// Throws IoError if the file cannot be read, ConfigError if it does not parse.
RunConfig load_run_config(const std::string& path);

/// Hex FNV-1a of the canonical JSON. With `study_scope` the ablation flags and
/// num_grids are reset first, so variants of one study hash equal.
std::string config_hash(const RunConfig& config, bool study_scope = false);

/// Identifier of the ablation the config's flags describe ("original" if none).
std::string variant_id(const RunConfig& config);

struct Datasets {
  SyntheticDataset train;
  std::optional<SyntheticDataset> eval;
};
Datasets make_datasets(const RunConfig& config);

}  // namespace faa
