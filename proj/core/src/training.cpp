// SPDX-License-Identifier: Apache-2.0
#include "faa/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "faa/errors.hpp"
#include "faa/ops.hpp"
#include "faa/regularization.hpp"

namespace faa {

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "epoch_decay";
}

std::string_view to_string(TaskLoss kind) {
  return kind == TaskLoss::kCrossEntropy ? "cross_entropy" : "zero";
}

ScheduleKind parse_schedule_kind(std::string_view text) {
  if (text == "linear") return ScheduleKind::kLinear;
  if (text == "epoch_decay") return ScheduleKind::kEpochDecay;
  throw ConfigError("unknown schedule '" + std::string(text) + "' (expected linear or epoch_decay)");
}

TaskLoss parse_task_loss(std::string_view text) {
  if (text == "cross_entropy") return TaskLoss::kCrossEntropy;
  if (text == "zero") return TaskLoss::kZero;
  throw ConfigError("unknown task_loss '" + std::string(text) + "' (expected cross_entropy or zero)");
}

void TrainConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(lr_faa)) throw ConfigError("train.lr_faa must be a finite value >= 0");
  if (!finite_nonneg(lr_head)) throw ConfigError("train.lr_head must be a finite value >= 0");
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ConfigError("train.warmup_ratio must lie in [0, 1)");
  if (!finite_nonneg(weight_decay)) throw ConfigError("train.weight_decay must be a finite value >= 0");
  if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) throw ConfigError("train.clip_norm must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train.dropout must lie in [0, 1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train.lr_decay must lie in (0, 1]");
}

double GateSnapshot::mean() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& row : values) {
    for (double v : row) s += v;
    n += row.size();
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

namespace {

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void check_widths(const Model& model, const SyntheticDataset& data) {
  if (data.size() == 0) throw ContractError("dataset is empty");
  if (data.spec.width != model.config.input_width()) {
    throw DimensionError("dataset width " + std::to_string(data.spec.width) + " does not match model input width " +
                         std::to_string(model.config.input_width()));
  }
  if (data.spec.seq_len > model.config.max_seq_len) {
    throw DimensionError("dataset seq_len " + std::to_string(data.spec.seq_len) + " exceeds model max_seq_len " +
                         std::to_string(model.config.max_seq_len));
  }
  if (data.spec.n_classes != model.config.n_classes) {
    throw DimensionError("dataset has " + std::to_string(data.spec.n_classes) + " classes, model head has " +
                         std::to_string(model.config.n_classes));
  }
}

}  // namespace

double evaluate_accuracy(Model& model, const SyntheticDataset& data, std::size_t batch_size) {
  check_widths(model, data);
  const std::vector<std::size_t> all = iota_n(data.size());
  std::size_t correct = 0;
  for (std::size_t start = 0; start < all.size(); start += batch_size) {
    const std::span<const std::size_t> idx(all.data() + start, std::min(batch_size, all.size() - start));
    Graph g;
    ForwardResult fwd = model_forward(g, model, data.batch_inputs(idx), data.seq_len());
    const Tensor& logits = fwd.logits.value();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols(); ++c) {
        if (logits.at(b, c) > logits.at(b, best)) best = c;
      }
      if (best == data.labels[idx[b]]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

GateSnapshot probe_gates(Model& model, const SyntheticDataset& data, std::size_t batch_size) {
  check_widths(model, data);
  const std::vector<std::size_t> idx = iota_n(std::min(batch_size, data.size()));
  Graph g;
  ForwardResult fwd = model_forward(g, model, data.batch_inputs(idx), data.seq_len());
  GateSnapshot snap;
  snap.layers = fwd.gate_layers;
  for (const Var& gates : fwd.gates) {
    const Tensor& r = gates.value();
    std::vector<double> means(r.cols(), 0.0);
    for (std::size_t i = 0; i < r.rows(); ++i) {
      for (std::size_t j = 0; j < r.cols(); ++j) means[j] += r.at(i, j);
    }
    for (double& m : means) m /= static_cast<double>(r.rows());
    snap.values.push_back(std::move(means));
  }
  return snap;
}

TrainReport train(Model& model, const SyntheticDataset& data, const TrainConfig& cfg, const SyntheticDataset* eval) {
  cfg.validate();
  check_widths(model, data);
  if (eval) check_widths(model, *eval);

  const Partition partition = partition_params(model);
  ParamRefs refs;
  model.for_each_param([&](const std::string& name, Tensor& t) { refs[name] = &t; });

  const RegWeights reg = model.config.faa.reg_weights();
  const std::size_t n = data.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = per_epoch * cfg.epochs;
  const AdamWHyper hyper{.weight_decay = cfg.weight_decay};
  AdamWState state;
  const Rng root(cfg.seed, "train");

  TrainReport report;
  report.trainable_params = model.param_count(true);
  report.total_params = model.param_count(false);
  report.gate_trace.push_back(probe_gates(model, data, cfg.batch_size));

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = iota_n(n);
    Rng shuffle = root.substream("shuffle", epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++step) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, n - start));
      const std::vector<std::size_t> labels = data.batch_labels(idx);

      Graph g;
      Rng drop_rng = root.substream("dropout", step);
      const DropoutPlan plan{cfg.dropout, &drop_rng};
      ForwardResult fwd = model_forward(g, model, data.batch_inputs(idx), data.seq_len(), plan);
      Var task = cfg.task_loss == TaskLoss::kCrossEntropy ? cross_entropy(fwd.logits, labels)
                                                          : g.constant(Tensor::scalar(0.0));
      Var loss = total_loss(task, freq_regularizer(g, fwd.gates, reg));
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite loss at step " + std::to_string(step) + " (epoch " + std::to_string(epoch) +
                             ")");
      }
      report.loss_trace.push_back(value);

      zero_grads(model);
      g.backward(loss);
      GradMap grads = clip_global_norm(apply_freeze(collect_grads(model), partition), cfg.clip_norm);
      zero_grads(model);

      GradMap head_grads, faa_grads;
      for (auto& [name, grad] : grads) {
        (name.rfind("head.", 0) == 0 ? head_grads : faa_grads)[name] = std::move(grad);
      }
      auto lr_at = [&](double base) {
        return cfg.schedule == ScheduleKind::kLinear
                   ? lr_schedule(step, total, cfg.warmup_ratio, base)
                   : lr_epoch_decay(step, total, cfg.warmup_ratio, base, epoch, cfg.lr_decay);
      };
      adamw_step(refs, faa_grads, state, lr_at(cfg.lr_faa), hyper);
      adamw_step(refs, head_grads, state, lr_at(cfg.lr_head), hyper);
    }

    report.train_accuracy.push_back(evaluate_accuracy(model, data, cfg.batch_size));
    if (eval) report.eval_accuracy.push_back(evaluate_accuracy(model, *eval, cfg.batch_size));
    GateSnapshot snap = probe_gates(model, data, cfg.batch_size);
    snap.epoch = epoch + 1;
    snap.step = step;
    report.gate_trace.push_back(std::move(snap));
  }

  report.steps = step;
  report.final_loss = report.loss_trace.empty() ? 0.0 : report.loss_trace.back();
  report.final_train_accuracy = report.train_accuracy.back();
  if (eval) report.final_eval_accuracy = report.eval_accuracy.back();
  return report;
}

}  // namespace faa
