// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "faa/adapter.hpp"
#include "faa/run_config.hpp"
#include "faa/transformer.hpp"

namespace faa {

/// name -> {"shape": [...], "data": [...]} over every tensor `for_each` visits.
nlohmann::json params_to_json(const std::function<void(const ConstParamVisitor&)>& for_each);
/// Overwrites every visited tensor from `doc`. Missing keys, extra keys and
/// shape mismatches throw FormatError.
void params_from_json(const nlohmann::json& doc, const std::function<void(const ParamVisitor&)>& for_each);

nlohmann::json layer_to_json(const FaaLayerParams& params);
void layer_from_json(const nlohmann::json& doc, FaaLayerParams& params);

/// {"format", "version", "config", "params", "partition"}.
nlohmann::json checkpoint_to_json(const Model& model, const RunConfig& config);
void save_checkpoint(const std::string& path, const Model& model, const RunConfig& config);

/// Loads parameters into a model built from `config`; the stored tensors
/// must match its parameter set exactly.
void load_checkpoint_into(const std::string& path, Model& model);
/// Rebuilds the config stored in the checkpoint and the model it describes.
std::pair<RunConfig, Model> load_checkpoint(const std::string& path);

/// Writes `text` to `path`, throwing IoError naming the path on failure.
void write_text_file(const std::string& path, const std::string& text);
nlohmann::json read_json_file(const std::string& path);

}  // namespace faa
