// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "faa/run_config.hpp"
#include "faa/transformer.hpp"

namespace faa {

struct ParamCheck {
  std::string name;
  std::size_t size = 0;
  double worst = 0.0;
  bool ok = true;
};

struct GradcheckResult {
  std::vector<ParamCheck> params;
  double tolerance = 0.0;
  bool ok() const;
  std::vector<std::string> failures() const;
};

/// Compares backward() of the total loss (cross-entropy plus frequency
/// regularizer) with central differences for every trainable tensor of
/// `model`, without dropout.
GradcheckResult check_model_gradients(Model& model, const Tensor& inputs, const std::vector<std::size_t>& labels,
                                      std::size_t seq_len, double tolerance, double step);

/// Builds the seeded model and batch a config describes, moves every gamma
/// away from zero so the adapters receive gradient, and checks it.
GradcheckResult check_config_gradients(const RunConfig& config);

}  // namespace faa
