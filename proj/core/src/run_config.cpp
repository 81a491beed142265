// SPDX-License-Identifier: Apache-2.0
#include "faa/run_config.hpp"

#include <concepts>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>

#include "faa/errors.hpp"
#include "faa/rng.hpp"

namespace faa {

using nlohmann::json;

RunConfig::RunConfig() {
  model.faa.insertion_layers = {0, 1, 2, 3};
  task.noise = 0.3;
  task.band_lo = 0.5;
  task.split = SplitKind::kHighPass;
  task.phase_jitter = 0.0;
}

void RunConfig::derive_seeds() {
  model.faa.seed = seed;
  model.n_classes = task.n_classes;
  model.d_input = task.width;
  train.seed = Rng(seed, "train").next_u64();
  task.seed = Rng(seed, "data").next_u64();
}

void RunConfig::validate() const {
  if (study.empty() || study.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("study must be a non-empty name without path separators");
  }
  if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
  model.validate();
  train.validate();
  task.validate();
  if (task.seq_len > model.max_seq_len) {
    throw ConfigError("task.seq_len (" + std::to_string(task.seq_len) + ") exceeds model.max_seq_len (" +
                      std::to_string(model.max_seq_len) + ")");
  }
  if (task.n_classes != model.n_classes || task.width != model.input_width()) {
    throw ConfigError("model shape is out of sync with the task; call derive_seeds()");
  }
  if (!(gradcheck.tolerance > 0.0)) throw ConfigError("gradcheck.tolerance must be > 0");
  if (!(gradcheck.step > 0.0)) throw ConfigError("gradcheck.step must be > 0");
  if (gradcheck.batch == 0) throw ConfigError("gradcheck.batch must be positive");
  if (gradcheck.seq_len < 1 || gradcheck.seq_len > model.max_seq_len) {
    throw ConfigError("gradcheck.seq_len must lie in [1, model.max_seq_len]");
  }
}

json to_json(const RunConfig& c) {
  const FaaConfig& f = c.model.faa;
  json doc;
  doc["seed"] = c.seed;
  doc["study"] = c.study;
  doc["output"] = {{"dir", c.out_dir}};
  doc["model"] = {{"d_model", f.d_model},     {"n_blocks", c.model.n_blocks},
                  {"n_heads", c.model.n_heads}, {"d_ff", c.model.d_ff},
                  {"max_seq_len", c.model.max_seq_len}};
  doc["faa"] = {{"adapter", to_string(f.adapter)},
                {"mode", to_string(f.mode)},
                {"bottleneck", f.bottleneck},
                {"rff_dim", f.rff_dim},
                {"sigma", f.sigma},
                {"num_grids", f.num_grids},
                {"lambda1", f.lambda1},
                {"lambda2", f.lambda2},
                {"insertion_layers", f.insertion_layers},
                {"ablation",
                 {{"fixed_fusion", f.ablation.fixed_fusion},
                  {"static_gates", f.ablation.static_gates},
                  {"unfreeze_rff", f.ablation.unfreeze_rff},
                  {"no_gating", f.ablation.no_gating}}}};
  const TrainConfig& t = c.train;
  doc["train"] = {{"lr_faa", t.lr_faa},
                  {"lr_head", t.lr_head},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"warmup_ratio", t.warmup_ratio},
                  {"weight_decay", t.weight_decay},
                  {"clip_norm", t.clip_norm},
                  {"dropout", t.dropout},
                  {"schedule", to_string(t.schedule)},
                  {"lr_decay", t.lr_decay},
                  {"task_loss", to_string(t.task_loss)}};
  const SyntheticTaskSpec& k = c.task;
  doc["task"] = {{"n_samples", k.n_samples}, {"eval_samples", c.eval_samples},
                 {"n_classes", k.n_classes}, {"seq_len", k.seq_len},
                 {"width", k.width},         {"noise", k.noise},
                 {"split", to_string(k.split)}, {"cutoff", k.cutoff},
                 {"band_lo", k.band_lo},     {"band_hi", k.band_hi},
                 {"phase_jitter", k.phase_jitter}};
  doc["gradcheck"] = {{"tolerance", c.gradcheck.tolerance},
                      {"step", c.gradcheck.step},
                      {"batch", c.gradcheck.batch},
                      {"seq_len", c.gradcheck.seq_len}};
  return doc;
}

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    convert(*it, out, name(key));
  }

  const json* child(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + name(it.key().c_str()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  // Parsed text yields unsigned numbers; documents built in code may carry
  // non-negative values as signed.
  static bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  template <std::unsigned_integral U>
  static void convert(const json& v, U& out, const std::string& key) {
    if (!non_negative_integer(v)) throw ConfigError("'" + key + "' must be a non-negative integer");
    out = v.get<U>();
  }
  static void convert(const json& v, double& out, const std::string& key) {
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    out = v.get<double>();
  }
  static void convert(const json& v, bool& out, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
    out = v.get<bool>();
  }
  static void convert(const json& v, std::string& out, const std::string& key) {
    if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
    out = v.get<std::string>();
  }
  static void convert(const json& v, std::optional<std::string>& out, const std::string& key) {
    std::string text;
    convert(v, text, key);
    out = std::move(text);
  }
  static void convert(const json& v, std::vector<std::size_t>& out, const std::string& key) {
    if (!v.is_array()) throw ConfigError("'" + key + "' must be an array of non-negative integers");
    out.clear();
    for (const json& e : v) {
      if (!non_negative_integer(e)) throw ConfigError("'" + key + "' must be an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void read_enum(Section& s, const char* key, Enum& out, Parse parse) {
  std::optional<std::string> text;
  s.read(key, text);
  if (text) out = parse(*text);
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  root.read("seed", c.seed);
  root.read("study", c.study);
  if (const json* j = root.child("output")) {
    Section s(*j, "output");
    s.read("dir", c.out_dir);
    s.finish();
  }
  if (const json* j = root.child("model")) {
    Section s(*j, "model");
    s.read("d_model", c.model.faa.d_model);
    s.read("n_blocks", c.model.n_blocks);
    s.read("n_heads", c.model.n_heads);
    s.read("d_ff", c.model.d_ff);
    s.read("max_seq_len", c.model.max_seq_len);
    s.finish();
  }
  if (const json* j = root.child("faa")) {
    FaaConfig& f = c.model.faa;
    Section s(*j, "faa");
    read_enum(s, "adapter", f.adapter, parse_adapter_kind);
    read_enum(s, "mode", f.mode, parse_activation_mode);
    s.read("bottleneck", f.bottleneck);
    s.read("rff_dim", f.rff_dim);
    s.read("sigma", f.sigma);
    s.read("num_grids", f.num_grids);
    s.read("lambda1", f.lambda1);
    s.read("lambda2", f.lambda2);
    s.read("insertion_layers", f.insertion_layers);
    if (const json* a = s.child("ablation")) {
      Section sa(*a, "faa.ablation");
      sa.read("fixed_fusion", f.ablation.fixed_fusion);
      sa.read("static_gates", f.ablation.static_gates);
      sa.read("unfreeze_rff", f.ablation.unfreeze_rff);
      sa.read("no_gating", f.ablation.no_gating);
      sa.finish();
    }
    s.finish();
  }
  if (const json* j = root.child("train")) {
    TrainConfig& t = c.train;
    Section s(*j, "train");
    s.read("lr_faa", t.lr_faa);
    s.read("lr_head", t.lr_head);
    s.read("epochs", t.epochs);
    s.read("batch_size", t.batch_size);
    s.read("warmup_ratio", t.warmup_ratio);
    s.read("weight_decay", t.weight_decay);
    s.read("clip_norm", t.clip_norm);
    s.read("dropout", t.dropout);
    read_enum(s, "schedule", t.schedule, parse_schedule_kind);
    s.read("lr_decay", t.lr_decay);
    read_enum(s, "task_loss", t.task_loss, parse_task_loss);
    s.finish();
  }
  bool width_given = false;
  if (const json* j = root.child("task")) {
    SyntheticTaskSpec& k = c.task;
    Section s(*j, "task");
    s.read("n_samples", k.n_samples);
    s.read("eval_samples", c.eval_samples);
    s.read("n_classes", k.n_classes);
    s.read("seq_len", k.seq_len);
    width_given = j->contains("width");
    s.read("width", k.width);
    s.read("noise", k.noise);
    read_enum(s, "split", k.split, parse_split_kind);
    s.read("cutoff", k.cutoff);
    s.read("band_lo", k.band_lo);
    s.read("band_hi", k.band_hi);
    s.read("phase_jitter", k.phase_jitter);
    s.finish();
  }
  if (!width_given) c.task.width = c.model.faa.d_model;
  if (const json* j = root.child("gradcheck")) {
    Section s(*j, "gradcheck");
    s.read("tolerance", c.gradcheck.tolerance);
    s.read("step", c.gradcheck.step);
    s.read("batch", c.gradcheck.batch);
    s.read("seq_len", c.gradcheck.seq_len);
    s.finish();
  }
  root.finish();
  c.derive_seeds();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

std::string config_hash(const RunConfig& config, bool study_scope) {
  RunConfig c = config;
  if (study_scope) {
    c.model.faa.ablation = {};
    c.model.faa.num_grids = FaaConfig{}.num_grids;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

std::string variant_id(const RunConfig& config) {
  const AblationFlags& a = config.model.faa.ablation;
  std::string id;
  auto add = [&](const char* part) { id += id.empty() ? part : std::string("+") + part; };
  if (a.fixed_fusion) add("no_freq_activation");
  if (a.static_gates) add("static_gates");
  if (a.unfreeze_rff) add("unfreeze_rff");
  if (a.no_gating) add("no_gating_l1");
  return id.empty() ? "original" : id;
}

Datasets make_datasets(const RunConfig& config) {
  Datasets d{make_synthetic_task(config.task), std::nullopt};
  if (config.eval_samples > 0) {
    SyntheticTaskSpec spec = config.task;
    spec.n_samples = config.eval_samples;
    spec.seed = Rng(config.seed, "eval-data").next_u64();
    d.eval = make_synthetic_task(spec);
  }
  return d;
}

}  // namespace faa
