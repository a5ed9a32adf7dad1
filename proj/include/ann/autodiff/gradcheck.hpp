#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ann/autodiff/tensor.hpp"

namespace ann::ad {

struct GradCheckOptions {
  double eps = 1e-6;
  // A coordinate is treated as sitting on a kink (and skipped) when central
  // differences at eps and eps/2 disagree, or the one-sided slopes jump, by
  // more than this fraction of the slope.
  double kink_tolerance = 1e-5;
  // Extra absolute slack for the kink test, on top of the round-off estimate
  // derived from the loss magnitude.
  double kink_floor = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  // Index into the params span and flat element index of the worst coordinate.
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  std::vector<double> per_param_max;
};

// |a - b| / max(|a|, |b|, 1e-12)
double relative_error(double analytic, double numeric);

/// Compares recorded gradients of `params` against central finite differences
/// of `loss`, which must recompute the scalar loss from the current parameter
/// values. Parameters are perturbed in place and restored exactly.
///
/// Coordinates within eps of a non-differentiable point are detected by the
/// disagreement of two step sizes and skipped.
GradCheckReport finite_difference_check(const std::function<double()>& loss, std::span<Tensor> params,
                                        const GradCheckOptions& options = {});

}  // namespace ann::ad
