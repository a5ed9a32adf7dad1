#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ann/autodiff/gradcheck.hpp"
#include "ann/layers/model.hpp"

namespace ann::train {

struct ModelGradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t batch = 2;
  double seconds = 0.1;  // input length as a fraction of one second at spec.sample_rate
  ad::GradCheckOptions fd;
  // Negative control: offsets one analytic gradient entry before comparing.
  bool perturb_grad = false;
};

struct ParamGradCheck {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
};

struct ModelGradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst;  // "name[index]"
  std::vector<ParamGradCheck> params;
};

/// Checks the logits of a freshly initialized model on random intensities
/// through a fixed random projection sum(R * logits), R in [-1, 1]. Every
/// trainable parameter (sinc band edges included) is compared against central
/// finite differences in float64.
ModelGradCheckResult model_gradcheck(const layers::ModelSpec& spec, const ModelGradCheckOptions& options = {});

}  // namespace ann::train
