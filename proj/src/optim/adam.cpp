#include "ann/optim/adam.hpp"

#include <cmath>
#include <string>

#include "ann/errors.hpp"
#include "ann/nn/init.hpp"

namespace ann::optim {

double global_grad_norm(std::span<const ad::Tensor> params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double gv : p.grad()) sq += gv * gv;
  }
  return std::sqrt(sq);
}

double clip_grad_global_norm(std::span<ad::Tensor> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) throw TrainingDivergence("gradient norm is " + std::to_string(norm));
  if (norm <= max_norm) return 1.0;
  const double factor = max_norm / norm;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (double& gv : p.grad()) gv *= factor;
  }
  return factor;
}

void adam_step(AdamState& state, std::span<ad::Tensor> params) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw StructuralError("Adam state tracks " + std::to_string(state.m.size()) + " tensors, step got " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].size()) {
      throw StructuralError("Adam moment " + std::to_string(i) + " has " + std::to_string(state.m[i].size()) +
                            " entries, parameter has shape " + ad::to_string(params[i].shape()));
    }
    if (!params[i].has_grad()) {
      throw ContractError("Adam step on parameter " + std::to_string(i) + " without a gradient");
    }
  }

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].values();
    auto grad = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * grad[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

double constrained_step(AdamState& state, const StepGroups& groups, const StepOptions& options) {
  const double norm = global_grad_norm(groups.trainable);
  if (!std::isfinite(norm)) throw TrainingDivergence("gradient norm is " + std::to_string(norm));
  if (options.clip) clip_grad_global_norm(groups.trainable, options.max_grad_norm);
  adam_step(state, groups.trainable);
  if (options.float32_storage) {
    for (auto& p : groups.trainable)
      for (double& v : p.values()) v = static_cast<double>(static_cast<float>(v));
  }
  if (options.constrained) nn::project_unit_interval(groups.weights);
  return norm;
}

double lr_schedule(std::size_t epoch, std::size_t total_epochs, std::size_t fine_tune_epochs, double base_lr,
                   double fine_lr) {
  if (epoch >= total_epochs) {
    throw ContractError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total_epochs) + ")");
  }
  return epoch + fine_tune_epochs >= total_epochs ? fine_lr : base_lr;
}

}  // namespace ann::optim
