// SPDX-License-Identifier: Apache-2.0
#include "faa/checkpoint.hpp"

#include <fstream>
#include <set>

#include "faa/errors.hpp"

namespace faa {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "faa-checkpoint";
constexpr int kVersion = 1;

}  // namespace

json params_to_json(const std::function<void(const ConstParamVisitor&)>& for_each) {
  json out = json::object();
  for_each([&](const std::string& name, const Tensor& t) {
    out[name] = {{"shape", t.shape()}, {"data", t.values()}};
  });
  return out;
}

void params_from_json(const json& doc, const std::function<void(const ParamVisitor&)>& for_each) {
  if (!doc.is_object()) throw FormatError("checkpoint params must be an object");
  std::set<std::string> used;
  for_each([&](const std::string& name, Tensor& t) {
    auto it = doc.find(name);
    if (it == doc.end()) throw FormatError("checkpoint is missing parameter '" + name + "'");
    const json& entry = *it;
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("data")) {
      throw FormatError("checkpoint entry '" + name + "' needs 'shape' and 'data'");
    }
    Shape shape;
    std::vector<double> data;
    try {
      shape = entry.at("shape").get<Shape>();
      data = entry.at("data").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw FormatError("checkpoint entry '" + name + "' is malformed: " + e.what());
    }
    if (shape != t.shape()) {
      throw FormatError("checkpoint parameter '" + name + "' has shape " + shape_str(shape) + ", model expects " +
                        shape_str(t.shape()));
    }
    if (data.size() != t.numel()) {
      throw FormatError("checkpoint parameter '" + name + "' holds " + std::to_string(data.size()) +
                        " values for shape " + shape_str(shape));
    }
    std::copy(data.begin(), data.end(), t.mutable_data().begin());
    used.insert(name);
  });
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!used.count(it.key())) throw FormatError("checkpoint has unexpected parameter '" + it.key() + "'");
  }
}

json layer_to_json(const FaaLayerParams& params) {
  return params_to_json([&](const ConstParamVisitor& v) { params.for_each(v); });
}

void layer_from_json(const json& doc, FaaLayerParams& params) {
  params_from_json(doc, [&](const ParamVisitor& v) { params.for_each(v); });
}

json checkpoint_to_json(const Model& model, const RunConfig& config) {
  const Partition partition = partition_params(model);
  json labels = json::object();
  for (const auto& [name, group] : partition.labels) labels[name] = group == ParamGroup::kFaa ? "faa" : "base";
  return {{"format", kFormat},
          {"version", kVersion},
          {"config", to_json(config)},
          {"params", params_to_json([&](const ConstParamVisitor& v) { model.for_each_param(v); })},
          {"partition", labels}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed to write '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void save_checkpoint(const std::string& path, const Model& model, const RunConfig& config) {
  write_text_file(path, checkpoint_to_json(model, config).dump() + "\n");
}

namespace {

const json& checked_section(const json& doc, const char* key, const std::string& path) {
  if (!doc.is_object() || doc.value("format", "") != kFormat) {
    throw FormatError("'" + path + "' is not an faa checkpoint");
  }
  if (doc.value("version", 0) != kVersion) throw FormatError("'" + path + "' has an unsupported checkpoint version");
  auto it = doc.find(key);
  if (it == doc.end()) throw FormatError("'" + path + "' has no '" + key + "' section");
  return *it;
}

}  // namespace

void load_checkpoint_into(const std::string& path, Model& model) {
  const json doc = read_json_file(path);
  params_from_json(checked_section(doc, "params", path), [&](const ParamVisitor& v) { model.for_each_param(v); });
}

std::pair<RunConfig, Model> load_checkpoint(const std::string& path) {
  const json doc = read_json_file(path);
  RunConfig config;
  try {
    config = run_config_from_json(checked_section(doc, "config", path));
  } catch (const ConfigError& e) {
    throw FormatError("'" + path + "' stores an invalid config: " + e.what());
  }
  Model model = Model::init(config.model, config.seed);
  params_from_json(checked_section(doc, "params", path), [&](const ParamVisitor& v) { model.for_each_param(v); });
  return {std::move(config), std::move(model)};
}

}  // namespace faa
