// SPDX-License-Identifier: Apache-2.0
#include "faa/optim.hpp"

#include <cmath>

#include "faa/errors.hpp"

namespace faa {

void adamw_step(const ParamRefs& params, const GradMap& grads, AdamWState& state, double lr,
                const AdamWHyper& hyper) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    Tensor& p = *it->second;
    if (g.size() != p.numel()) {
      throw DimensionError("adamw_step: gradient for '" + name + "' has " + std::to_string(g.size()) +
                           " values, parameter has " + std::to_string(p.numel()));
    }
    AdamWSlot& slot = state[name];
    if (slot.m.empty()) {
      slot.m.assign(p.numel(), 0.0);
      slot.v.assign(p.numel(), 0.0);
    }
    ++slot.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(slot.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(slot.step));
    const double decay = 1.0 - lr * hyper.weight_decay;
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      slot.m[i] = hyper.beta1 * slot.m[i] + (1.0 - hyper.beta1) * g[i];
      slot.v[i] = hyper.beta2 * slot.v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double m_hat = slot.m[i] / bc1;
      const double v_hat = slot.v[i] / bc2;
      data[i] = data[i] * decay - lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

namespace {

std::size_t warmup_steps(std::size_t total_steps, double warmup_ratio) {
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) throw ContractError("warmup_ratio must lie in [0, 1)");
  return static_cast<std::size_t>(std::llround(warmup_ratio * static_cast<double>(total_steps)));
}

}  // namespace

double lr_schedule(std::size_t step, std::size_t total_steps, double warmup_ratio, double base_lr) {
  if (step > total_steps) throw ContractError("lr_schedule: step beyond total_steps");
  const std::size_t warm = warmup_steps(total_steps, warmup_ratio);
  if (step < warm) return base_lr * static_cast<double>(step) / static_cast<double>(warm);
  if (total_steps == warm) return base_lr;
  return base_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warm);
}

double lr_epoch_decay(std::size_t step, std::size_t total_steps, double warmup_ratio, double base_lr,
                      std::size_t epoch, double decay) {
  if (step > total_steps) throw ContractError("lr_epoch_decay: step beyond total_steps");
  const std::size_t warm = warmup_steps(total_steps, warmup_ratio);
  const double decayed = base_lr * std::pow(decay, static_cast<double>(epoch));
  if (step < warm) return decayed * static_cast<double>(step) / static_cast<double>(warm);
  return decayed;
}

}  // namespace faa
