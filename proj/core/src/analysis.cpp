// SPDX-License-Identifier: Apache-2.0
#include "faa/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "faa/checkpoint.hpp"
#include "faa/errors.hpp"
#include "faa/reports.hpp"

namespace faa {

using nlohmann::json;

namespace {

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace

FrequencyReport frequency_report(Model& model, const Tensor& inputs, std::size_t seq_len) {
  Graph g;
  ForwardResult fwd = model_forward(g, model, inputs, seq_len);
  if (fwd.gate_layers.empty()) throw ContractError("frequency_report: model has no gated FAA insertion layer");

  FrequencyReport report;
  report.num_grids = model.config.faa.num_grids;
  report.rows = inputs.rows();
  for (std::size_t k = 0; k < fwd.gate_layers.size(); ++k) {
    const FaaTrace& trace = fwd.traces[k];
    const Tensor& r = trace.gates->value();
    LayerFrequency lf;
    lf.layer = fwd.gate_layers[k];
    for (std::size_t i = 0; i < trace.normalized_channels.size(); ++i) {
      const Tensor& ln = trace.normalized_channels[i].value();
      std::vector<double> norms(ln.rows()), gates(ln.rows());
      for (std::size_t row = 0; row < ln.rows(); ++row) {
        double sq = 0.0;
        for (std::size_t c = 0; c < ln.cols(); ++c) sq += ln.at(row, c) * ln.at(row, c);
        gates[row] = r.at(row, i);
        norms[row] = std::abs(gates[row]) * std::sqrt(sq);
      }
      lf.norms.push_back(sorted_mean(std::move(norms)));
      lf.gates.push_back(sorted_mean(std::move(gates)));
    }
    report.layers.push_back(std::move(lf));
  }
  return report;
}

std::string heatmap_csv(const FrequencyReport& report) {
  std::string out = "layer";
  for (std::size_t i = 0; i < report.num_grids; ++i) out += ",grid_" + std::to_string(i);
  out += "\n";
  for (const LayerFrequency& lf : report.layers) {
    out += std::to_string(lf.layer);
    for (double v : lf.norms) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

json to_json(const FrequencyReport& report) {
  json layers = json::array();
  for (const LayerFrequency& lf : report.layers) {
    layers.push_back({{"layer", lf.layer}, {"norms", lf.norms}, {"gates", lf.gates}});
  }
  return {{"num_grids", report.num_grids},
          {"rows", report.rows},
          {"seed", report.seed},
          {"config_hash", report.config_hash},
          {"split", report.split},
          {"layers", layers}};
}

void export_reports(const FrequencyReport& report, const std::string& path_prefix) {
  write_text_file(path_prefix + ".csv", heatmap_csv(report));
  write_text_file(path_prefix + ".json", to_json(report).dump(2) + "\n");
}

std::string artifact_stem(std::string_view study, std::string_view variant, std::uint64_t seed) {
  return std::string(study) + "_" + std::string(variant) + "_" + std::to_string(seed);
}

std::string AblationVariant::id() const {
  switch (kind) {
    case AblationKind::kOriginal: return "original";
    case AblationKind::kNoFreqActivation: return "no_freq_activation";
    case AblationKind::kStaticGates: return "static_gates";
    case AblationKind::kUnfreezeRff: return "unfreeze_rff";
    case AblationKind::kNoGatingL1: return "no_gating_l1";
    case AblationKind::kNumGrids: return num_grids == 0 ? "num_grids" : "num_grids=" + std::to_string(num_grids);
  }
  return "original";
}

AblationVariant parse_ablation_variant(std::string_view text) {
  if (text == "original") return {AblationKind::kOriginal};
  if (text == "no_freq_activation") return {AblationKind::kNoFreqActivation};
  if (text == "static_gates") return {AblationKind::kStaticGates};
  if (text == "unfreeze_rff") return {AblationKind::kUnfreezeRff};
  if (text == "no_gating_l1") return {AblationKind::kNoGatingL1};
  if (text == "num_grids") return {AblationKind::kNumGrids, 0};
  constexpr std::string_view prefix = "num_grids=";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string_view digits = text.substr(prefix.size());
    std::size_t value = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (res.ec == std::errc() && res.ptr == digits.data() + digits.size() && value > 0) {
      return {AblationKind::kNumGrids, value};
    }
  }
  throw ConfigError("unknown ablation variant '" + std::string(text) +
                    "' (expected original, no_freq_activation, static_gates, unfreeze_rff, no_gating_l1, "
                    "num_grids or num_grids=K)");
}

std::vector<AblationVariant> default_ablation_variants() {
  return {{AblationKind::kOriginal},   {AblationKind::kNoFreqActivation}, {AblationKind::kStaticGates},
          {AblationKind::kUnfreezeRff}, {AblationKind::kNoGatingL1},       {AblationKind::kNumGrids, 0}};
}

const std::vector<std::size_t>& num_grids_sweep_values() {
  static const std::vector<std::size_t> values = {1, 3, 5, 7, 9, 11};
  return values;
}

RunConfig apply_variant(const RunConfig& base, const AblationVariant& variant) {
  RunConfig c = base;
  AblationFlags& a = c.model.faa.ablation;
  switch (variant.kind) {
    case AblationKind::kOriginal: break;
    case AblationKind::kNoFreqActivation: a.fixed_fusion = true; break;
    case AblationKind::kStaticGates: a.static_gates = true; break;
    case AblationKind::kUnfreezeRff: a.unfreeze_rff = true; break;
    case AblationKind::kNoGatingL1: a.no_gating = true; break;
    case AblationKind::kNumGrids:
      if (variant.num_grids == 0) throw ContractError("apply_variant: the num_grids sweep is not a single variant");
      c.model.faa.num_grids = variant.num_grids;
      break;
  }
  c.validate();
  return c;
}

namespace {

AblationResult train_variant(const std::string& id, const RunConfig& cfg) {
  const Datasets data = make_datasets(cfg);
  Model model = Model::init(cfg.model, cfg.seed);
  AblationResult r;
  r.variant = id;
  r.report = train(model, data.train, cfg.train, data.eval ? &*data.eval : nullptr);
  r.metric = r.report.final_eval_accuracy.value_or(r.report.final_train_accuracy);
  r.trainable_params = r.report.trainable_params;
  r.config_hash = config_hash(cfg);
  r.study_hash = config_hash(cfg, true);
  return r;
}

}  // namespace

AblationResult run_ablation(const AblationVariant& variant, const RunConfig& base) {
  return train_variant(variant.id(), apply_variant(base, variant));
}

AblationStudy run_ablation_study(const std::vector<AblationVariant>& variants, const RunConfig& base) {
  // Runs are keyed by their full config hash so num_grids=<default> reuses
  // the original run.
  std::map<std::string, AblationResult> cache;
  auto run = [&](const AblationVariant& v) {
    const RunConfig cfg = apply_variant(base, v);
    const std::string key = config_hash(cfg);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, train_variant(v.id(), cfg)).first;
    AblationResult r = it->second;
    r.variant = v.id();
    return r;
  };

  const AblationResult original = run({AblationKind::kOriginal});
  AblationStudy study;
  for (const AblationVariant& v : variants) {
    if (v.kind == AblationKind::kNumGrids && v.num_grids == 0) {
      std::optional<AblationResult> best;
      for (std::size_t n : num_grids_sweep_values()) {
        AblationResult r = run({AblationKind::kNumGrids, n});
        r.delta = r.metric - original.metric;
        if (!best || r.metric > best->metric) best = r;
        study.sweep.push_back(std::move(r));
      }
      best->variant = "num_grids";
      study.rows.push_back(std::move(*best));
      continue;
    }
    AblationResult r = run(v);
    r.delta = r.metric - original.metric;
    study.rows.push_back(std::move(r));
  }
  return study;
}

std::string ablation_csv(const std::vector<AblationResult>& rows) {
  std::string out = "variant,metric,trainable_params,delta\n";
  for (const AblationResult& r : rows) {
    out += r.variant + "," + format_double(r.metric) + "," + std::to_string(r.trainable_params) + "," +
           format_double(r.delta) + "\n";
  }
  return out;
}

json to_json(const AblationStudy& study) {
  auto rows_json = [](const std::vector<AblationResult>& rows) {
    json arr = json::array();
    for (const AblationResult& r : rows) {
      arr.push_back({{"variant", r.variant},
                     {"metric", r.metric},
                     {"trainable_params", r.trainable_params},
                     {"delta", r.delta},
                     {"config_hash", r.config_hash},
                     {"study_hash", r.study_hash},
                     {"final_loss", r.report.final_loss},
                     {"steps", r.report.steps}});
    }
    return arr;
  };
  return {{"rows", rows_json(study.rows)}, {"sweep", rows_json(study.sweep)}};
}

}  // namespace faa
