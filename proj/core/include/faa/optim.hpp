// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "faa/gradcheck.hpp"
#include "faa/tensor.hpp"

namespace faa {

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWSlot {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

using AdamWState = std::map<std::string, AdamWSlot>;
using ParamRefs = std::map<std::string, Tensor*>;

/// Decoupled-weight-decay Adam. Updates every parameter that has an entry in
/// `grads`; bias correction uses each parameter's own step count.
void adamw_step(const ParamRefs& params, const GradMap& grads, AdamWState& state, double lr,
                const AdamWHyper& hyper);

/// Linear warmup from 0 to base_lr over round(warmup_ratio * total_steps)
/// steps, then linear decay to 0 at total_steps.
double lr_schedule(std::size_t step, std::size_t total_steps, double warmup_ratio, double base_lr);

/// Warmup as above, then base_lr * decay^epoch (piecewise constant per epoch).
double lr_epoch_decay(std::size_t step, std::size_t total_steps, double warmup_ratio, double base_lr,
                      std::size_t epoch, double decay);

}  // namespace faa
