// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "faa/optim.hpp"
#include "faa/synthetic.hpp"
#include "faa/transformer.hpp"

namespace faa {

enum class ScheduleKind { kLinear, kEpochDecay };
enum class TaskLoss { kCrossEntropy, kZero };

std::string_view to_string(ScheduleKind kind);
std::string_view to_string(TaskLoss kind);
ScheduleKind parse_schedule_kind(std::string_view text);
TaskLoss parse_task_loss(std::string_view text);

struct TrainConfig {
  double lr_faa = 2e-2;
  double lr_head = 8e-3;
  std::size_t epochs = 25;
  std::size_t batch_size = 32;
  double warmup_ratio = 0.06;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  double dropout = 0.1;
  ScheduleKind schedule = ScheduleKind::kLinear;
  /// Per-epoch factor for ScheduleKind::kEpochDecay.
  double lr_decay = 0.8;
  /// kZero trains on the frequency regularizer alone.
  TaskLoss task_loss = TaskLoss::kCrossEntropy;
  /// Drives shuffling and dropout.
  std::uint64_t seed = 0;

  void validate() const;
};

/// Batch-mean gate value per (layer, grid) at a point in training.
struct GateSnapshot {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<std::size_t> layers;
  std::vector<std::vector<double>> values;

  double mean() const;
};

struct TrainReport {
  std::vector<double> loss_trace;       // total loss per step
  std::vector<double> train_accuracy;   // after each epoch
  std::vector<double> eval_accuracy;    // after each epoch, if an eval set was given
  std::vector<GateSnapshot> gate_trace; // before training, then after each epoch
  std::size_t steps = 0;
  double final_loss = 0.0;
  double final_train_accuracy = 0.0;
  std::optional<double> final_eval_accuracy;
  std::size_t trainable_params = 0;
  std::size_t total_params = 0;
};

/// Fraction of correctly classified samples, evaluated without dropout.
double evaluate_accuracy(Model& model, const SyntheticDataset& data, std::size_t batch_size = 64);

/// Mean gates over the first min(batch_size, n) samples, no dropout.
GateSnapshot probe_gates(Model& model, const SyntheticDataset& data, std::size_t batch_size);

/// Trains the adapter side of `model` in place. Throws NumericalError naming
/// the step if the loss becomes non-finite.
TrainReport train(Model& model, const SyntheticDataset& data, const TrainConfig& cfg,
                  const SyntheticDataset* eval = nullptr);

}  // namespace faa
