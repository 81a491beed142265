// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "faa/training.hpp"

namespace faa {

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

nlohmann::json to_json(const GateSnapshot& snapshot);
nlohmann::json to_json(const TrainReport& report);

/// "step,value" rows, one per optimizer step.
std::string loss_trace_csv(const TrainReport& report);
/// "epoch,step,layer,grid,value" rows, one per logged gate mean.
std::string gate_trace_csv(const TrainReport& report);

}  // namespace faa
