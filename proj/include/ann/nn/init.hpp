#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "ann/autodiff/tensor.hpp"

namespace ann::nn {

using Rng = std::mt19937_64;

enum class InitKind { uniform_nonneg, xavier_uniform, abs_xavier_uniform };

std::string_view to_string(InitKind kind);
InitKind parse_init_kind(std::string_view name);

struct InitSpec {
  InitKind kind = InitKind::uniform_nonneg;
  // Upper bound c for uniform_nonneg, gain for the Xavier variants.
  double scale = 0.05;
};

void validate(const InitSpec& spec);

// i.i.d. U(0, c).
ad::Tensor init_uniform_nonneg(const ad::Shape& shape, double c, Rng& rng);

// U(-a, a) with a = gain * sqrt(6 / (fan_in + fan_out)). The shape is
// [fan_out x fan_in] (or [fan_out] for vectors, treated as fan_in = 1).
double xavier_bound(const ad::Shape& shape, double gain);
ad::Tensor init_xavier_uniform(const ad::Shape& shape, double gain, Rng& rng);
// |U(-a, a)|, hence in [0, a).
ad::Tensor init_abs_xavier(const ad::Shape& shape, double gain, Rng& rng);

ad::Tensor initialize(const ad::Shape& shape, const InitSpec& spec, Rng& rng);

// Clamps every element into [0, 1]. In-range values are left untouched.
void project_unit_interval(ad::Tensor& t);
void project_unit_interval(std::span<ad::Tensor> tensors);

}  // namespace ann::nn
