#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ann/autodiff/tensor.hpp"

namespace ann::optim {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

// Global L2 norm over all gradient buffers.
double global_grad_norm(std::span<const ad::Tensor> params);

/// Rescales all gradients by max_norm / norm when the global norm exceeds
/// max_norm. Returns the applied factor (1 when untouched). Throws
/// TrainingDivergence when the norm is not finite.
double clip_grad_global_norm(std::span<ad::Tensor> params, double max_norm = 1.0);

// Bias-corrected Adam update, in place, using each tensor's gradient buffer.
void adam_step(AdamState& state, std::span<ad::Tensor> params);

struct StepGroups {
  std::span<ad::Tensor> trainable;  // everything Adam updates
  std::span<ad::Tensor> weights;    // subset projected onto [0, 1]
};

struct StepOptions {
  double max_grad_norm = 1.0;
  bool clip = true;
  bool constrained = true;
  // Round parameters to float32 after the update (checkpoint precision).
  bool float32_storage = true;
};

/// clip -> Adam -> (constrained) projection of the weight tensors, in that
/// order. Returns the gradient norm before clipping.
double constrained_step(AdamState& state, const StepGroups& groups, const StepOptions& options);

/// 1e-3 (base) before the last `fine_tune_epochs` epochs, 1e-4 (fine) within them.
double lr_schedule(std::size_t epoch, std::size_t total_epochs, std::size_t fine_tune_epochs = 10,
                   double base_lr = 1e-3, double fine_lr = 1e-4);

}  // namespace ann::optim
