// SPDX-License-Identifier: Apache-2.0
#include "faa/reports.hpp"

#include <charconv>
#include <cmath>

#include "faa/errors.hpp"

namespace faa {

using nlohmann::json;

std::string format_double(double value) {
  if (!std::isfinite(value)) throw NumericalError("format_double: non-finite value");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

json to_json(const GateSnapshot& s) {
  return {{"epoch", s.epoch}, {"step", s.step}, {"layers", s.layers}, {"values", s.values}, {"mean", s.mean()}};
}

json to_json(const TrainReport& r) {
  json gates = json::array();
  for (const GateSnapshot& s : r.gate_trace) gates.push_back(to_json(s));
  json doc = {{"steps", r.steps},
              {"final_loss", r.final_loss},
              {"final_train_accuracy", r.final_train_accuracy},
              {"final_eval_accuracy", r.final_eval_accuracy ? json(*r.final_eval_accuracy) : json(nullptr)},
              {"trainable_params", r.trainable_params},
              {"total_params", r.total_params},
              {"loss_trace", r.loss_trace},
              {"train_accuracy", r.train_accuracy},
              {"eval_accuracy", r.eval_accuracy},
              {"gate_trace", gates}};
  return doc;
}

std::string loss_trace_csv(const TrainReport& r) {
  std::string out = "step,value\n";
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) {
    out += std::to_string(i) + "," + format_double(r.loss_trace[i]) + "\n";
  }
  return out;
}

std::string gate_trace_csv(const TrainReport& r) {
  std::string out = "epoch,step,layer,grid,value\n";
  for (const GateSnapshot& s : r.gate_trace) {
    for (std::size_t l = 0; l < s.values.size(); ++l) {
      for (std::size_t i = 0; i < s.values[l].size(); ++i) {
        out += std::to_string(s.epoch) + "," + std::to_string(s.step) + "," + std::to_string(s.layers[l]) + "," +
               std::to_string(i) + "," + format_double(s.values[l][i]) + "\n";
      }
    }
  }
  return out;
}

}  // namespace faa
