// SPDX-License-Identifier: Apache-2.0
#include "faa/model_gradcheck.hpp"

#include "faa/errors.hpp"
#include "faa/gradcheck.hpp"
#include "faa/ops.hpp"
#include "faa/regularization.hpp"
#include "faa/rng.hpp"

namespace faa {

bool GradcheckResult::ok() const {
  for (const ParamCheck& p : params) {
    if (!p.ok) return false;
  }
  return true;
}

std::vector<std::string> GradcheckResult::failures() const {
  std::vector<std::string> out;
  for (const ParamCheck& p : params) {
    if (!p.ok) out.push_back(p.name);
  }
  return out;
}

GradcheckResult check_model_gradients(Model& model, const Tensor& inputs, const std::vector<std::size_t>& labels,
                                      std::size_t seq_len, double tolerance, double step) {
  const RegWeights reg = model.config.faa.reg_weights();
  auto build = [&](Graph& g) {
    ForwardResult fwd = model_forward(g, model, inputs, seq_len);
    return total_loss(cross_entropy(fwd.logits, labels), freq_regularizer(g, fwd.gates, reg));
  };
  auto loss_value = [&] {
    Graph g;
    return build(g).value().item();
  };

  zero_grads(model);
  {
    Graph g;
    g.backward(build(g));
  }
  const GradMap analytic = collect_grads(model);
  zero_grads(model);

  GradcheckResult result;
  result.tolerance = tolerance;
  for (const auto& [name, grad] : analytic) {
    Tensor* param = model.find_param(name);
    const std::vector<double> numeric = finite_diff_grad_inplace(*param, loss_value, {}, step);
    ParamCheck pc{name, grad.size(), max_relative_error(grad, numeric), true};
    pc.ok = pc.worst <= tolerance;
    result.params.push_back(std::move(pc));
  }
  return result;
}

GradcheckResult check_config_gradients(const RunConfig& config) {
  Model model = Model::init(config.model, config.seed);
  Rng rng(config.seed, "gradcheck");
  Rng gamma_rng = rng.substream("gamma");
  model.for_each_param([&](const std::string& name, Tensor& t) {
    if (name.size() >= 6 && name.compare(name.size() - 6, 6, ".gamma") == 0) {
      for (double& v : t.mutable_data()) v = gamma_rng.uniform(0.5, 1.5);
    }
  });

  SyntheticTaskSpec spec = config.task;
  spec.n_samples = config.gradcheck.batch;
  spec.seq_len = config.gradcheck.seq_len;
  spec.seed = rng.substream("data").next_u64();
  // Short sequences may not hold enough frequency bins for the configured band.
  spec.band_lo = 0.0;
  spec.band_hi = 1.0;
  if (spec.seq_len < 2 * spec.n_classes) spec.seq_len = std::min(config.model.max_seq_len, 2 * spec.n_classes);
  const SyntheticDataset data = make_synthetic_task(spec);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return check_model_gradients(model, data.batch_inputs(idx), data.batch_labels(idx), data.seq_len(),
                               config.gradcheck.tolerance, config.gradcheck.step);
}

}  // namespace faa
