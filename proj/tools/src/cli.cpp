// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "faa/analysis.hpp"
#include "faa/checkpoint.hpp"
#include "faa/errors.hpp"
#include "faa/model_gradcheck.hpp"
#include "faa/ops.hpp"
#include "faa/reports.hpp"
#include "faa/run_config.hpp"

namespace faa::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool force = false;
};

// Signals a failed gradient check after the table has been printed.
struct GradcheckFailure {
  std::vector<std::string> groups;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config_path.empty() ? run_config_from_json(json::object()) : load_run_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.derive_seeds();
  cfg.validate();
  return cfg;
}

// Refuses to overwrite anything unless --force, before any compute starts.
std::vector<std::string> plan_outputs(const GlobalOptions& g, const RunConfig& cfg,
                                      const std::vector<std::string>& names) {
  std::vector<std::string> paths;
  for (const std::string& n : names) {
    const std::string p = (fs::path(cfg.out_dir) / n).string();
    if (!g.force && fs::exists(p)) throw ConfigError("output '" + p + "' already exists (use --force to overwrite)");
    paths.push_back(p);
  }
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  return paths;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void cmd_train(const GlobalOptions& g, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  const std::string stem = artifact_stem(cfg.study, variant_id(cfg), cfg.seed);
  const auto paths = plan_outputs(g, cfg,
                                  {stem + "_report.json", stem + "_loss.csv", stem + "_gates.csv",
                                   stem + "_checkpoint.json"});

  const Datasets data = make_datasets(cfg);
  Model model = Model::init(cfg.model, cfg.seed);
  const TrainReport report = train(model, data.train, cfg.train, data.eval ? &*data.eval : nullptr);

  const json doc = {{"command", "train"},
                    {"variant", variant_id(cfg)},
                    {"seed", cfg.seed},
                    {"config_hash", config_hash(cfg)},
                    {"study_hash", config_hash(cfg, true)},
                    {"config", to_json(cfg)},
                    {"report", to_json(report)}};
  write_text_file(paths[0], doc.dump(2) + "\n");
  write_text_file(paths[1], loss_trace_csv(report));
  write_text_file(paths[2], gate_trace_csv(report));
  save_checkpoint(paths[3], model, cfg);

  out << "steps " << report.steps << "  final loss " << fixed(report.final_loss, 6) << "  train acc "
      << fixed(report.final_train_accuracy, 4);
  if (report.final_eval_accuracy) out << "  eval acc " << fixed(*report.final_eval_accuracy, 4);
  out << "\ntrainable " << report.trainable_params << " / " << report.total_params << " parameters\n";
  for (const std::string& p : paths) out << "wrote " << p << "\n";
}

void cmd_gradcheck(const GlobalOptions& g, std::optional<double> fault_scale, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  const auto paths = plan_outputs(g, cfg, {artifact_stem(cfg.study, "gradcheck", cfg.seed) + ".json"});

  struct ScaleGuard {
    double saved = debug::gelu_derivative_scale();
    ~ScaleGuard() { debug::set_gelu_derivative_scale(saved); }
  } guard;
  if (fault_scale) debug::set_gelu_derivative_scale(*fault_scale);

  const GradcheckResult result = check_config_gradients(cfg);
  json rows = json::array();
  out << "parameter                                size   worst_rel_err  status\n";
  for (const ParamCheck& p : result.params) {
    std::string name = p.name;
    if (name.size() < 40) name.resize(40, ' ');
    std::string size = std::to_string(p.size);
    if (size.size() < 6) size.insert(0, 6 - size.size(), ' ');
    out << name << ' ' << size << "   " << sci(p.worst) << "      " << (p.ok ? "ok" : "FAIL") << "\n";
    rows.push_back({{"parameter", p.name}, {"size", p.size}, {"worst", p.worst}, {"ok", p.ok}});
  }
  const json doc = {{"command", "gradcheck"},
                    {"seed", cfg.seed},
                    {"config_hash", config_hash(cfg)},
                    {"tolerance", result.tolerance},
                    {"ok", result.ok()},
                    {"params", rows}};
  write_text_file(paths[0], doc.dump(2) + "\n");
  out << "wrote " << paths[0] << "\n";
  if (!result.ok()) throw GradcheckFailure{result.failures()};
}

void cmd_ablate(const GlobalOptions& g, const std::vector<std::string>& names, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  std::vector<AblationVariant> variants;
  for (const std::string& n : names) variants.push_back(parse_ablation_variant(n));
  if (variants.empty()) variants = default_ablation_variants();
  bool sweep = false;
  for (const AblationVariant& v : variants) sweep |= v.kind == AblationKind::kNumGrids && v.num_grids == 0;

  const std::string stem = artifact_stem(cfg.study, "ablation", cfg.seed);
  std::vector<std::string> files = {stem + ".csv", stem + ".json"};
  if (sweep) files.push_back(artifact_stem(cfg.study, "num_grids", cfg.seed) + ".csv");
  const auto paths = plan_outputs(g, cfg, files);

  const AblationStudy study = run_ablation_study(variants, cfg);
  write_text_file(paths[0], ablation_csv(study.rows));
  json doc = to_json(study);
  doc["seed"] = cfg.seed;
  doc["study"] = cfg.study;
  doc["study_hash"] = config_hash(cfg, true);
  write_text_file(paths[1], doc.dump(2) + "\n");
  if (sweep) write_text_file(paths[2], ablation_csv(study.sweep));

  out << "variant               metric   trainable   delta\n";
  auto print = [&](const AblationResult& r) {
    std::string id = r.variant;
    if (id.size() < 20) id.resize(20, ' ');
    out << id << "  " << fixed(r.metric, 4) << "   " << r.trainable_params << "   " << fixed(r.delta, 4) << "\n";
  };
  for (const AblationResult& r : study.rows) print(r);
  if (sweep) {
    out << "num_grids sweep:\n";
    for (const AblationResult& r : study.sweep) print(r);
  }
  for (const std::string& p : paths) out << "wrote " << p << "\n";
}

void cmd_analyze(const GlobalOptions& g, const std::string& checkpoint, const std::string& split,
                 std::size_t batch, std::ostream& out) {
  RunConfig cfg;
  Model model;
  if (g.config_path.empty()) {
    auto loaded = load_checkpoint(checkpoint);
    cfg = std::move(loaded.first);
    model = std::move(loaded.second);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    cfg.derive_seeds();
  } else {
    cfg = resolve_config(g);
    model = Model::init(cfg.model, cfg.seed);
    load_checkpoint_into(checkpoint, model);
  }
  if (!split.empty()) cfg.task.split = parse_split_kind(split);
  cfg.validate();

  const auto paths = plan_outputs(g, cfg, {artifact_stem(cfg.study, variant_id(cfg), cfg.seed) + ".csv",
                                           artifact_stem(cfg.study, variant_id(cfg), cfg.seed) + ".json"});
  const Datasets data = make_datasets(cfg);
  const SyntheticDataset& source = data.eval ? *data.eval : data.train;
  std::vector<std::size_t> idx(std::min(batch, source.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  FrequencyReport report = frequency_report(model, source.batch_inputs(idx), source.seq_len());
  report.seed = cfg.seed;
  report.config_hash = config_hash(cfg);
  report.split = std::string(to_string(cfg.task.split));
  export_reports(report, paths[0].substr(0, paths[0].size() - 4));

  out << "frequency report: " << report.layers.size() << " layers x " << report.num_grids << " grids over "
      << report.rows << " rows (" << report.split << ")\n";
  for (const LayerFrequency& lf : report.layers) {
    out << "layer " << lf.layer << ":";
    for (double v : lf.norms) out << ' ' << fixed(v, 4);
    out << "\n";
  }
  for (const std::string& p : paths) out << "wrote " << p << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourier-activated adapter experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON run config (defaults apply when omitted)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", g.out_dir, "Override the output directory");
  app.add_flag("--force", g.force, "Overwrite existing outputs");

  auto* train = app.add_subcommand("train", "Train the adapters and write report, traces and checkpoint");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  double fault = 1.0;
  auto* fault_opt = gradcheck->add_option("--fault-gelu-scale", fault, "Corrupt the GELU backward rule")
                        ->group("");

  auto* ablate = app.add_subcommand("ablate", "Train ablation variants on identical data");
  std::vector<std::string> variants;
  ablate->add_option("variants", variants, "Variants (default: all)");

  auto* analyze = app.add_subcommand("analyze", "Per-layer, per-grid frequency report from a checkpoint");
  std::string checkpoint, split;
  std::size_t batch = 64;
  analyze->add_option("--checkpoint", checkpoint, "Checkpoint JSON written by train")->required();
  analyze->add_option("--split", split, "Override task split: full, high_pass or low_pass");
  analyze->add_option("--batch", batch, "Number of evaluation sequences")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (train->parsed()) cmd_train(g, out);
    if (gradcheck->parsed()) cmd_gradcheck(g, fault_opt->count() > 0 ? std::optional(fault) : std::nullopt, out);
    if (ablate->parsed()) cmd_ablate(g, variants, out);
    if (analyze->parsed()) cmd_analyze(g, checkpoint, split, batch, out);
  } catch (const GradcheckFailure& f) {
    err << "error: gradient check failed for:";
    for (const std::string& name : f.groups) err << ' ' << name;
    err << "\n";
    return kGradcheckFailed;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace faa::cli
