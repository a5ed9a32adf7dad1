#pragma once

#include <string>
#include <string_view>

#include "ann/autodiff/graph.hpp"
#include "ann/autodiff/tensor.hpp"

namespace ann::nn {

enum class ActivationKind { offset_relu, offset_abs, tanh };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation_kind(std::string_view name);

struct ActivationSpec {
  ActivationKind kind = ActivationKind::offset_abs;
  // Threshold c. Ignored for tanh.
  double offset = 0.0;

  bool non_negative() const { return kind != ActivationKind::tanh; }
};

// max(x - c, 0); gradient 1 where x > c, else 0.
ad::Tensor offset_relu(ad::Graph& g, const ad::Tensor& x, double c);
// |x - c|; gradient sign(x - c), 0 at the kink.
ad::Tensor offset_abs(ad::Graph& g, const ad::Tensor& x, double c);
ad::Tensor tanh(ad::Graph& g, const ad::Tensor& x);

ad::Tensor activate(ad::Graph& g, const ad::Tensor& x, const ActivationSpec& spec);

}  // namespace ann::nn
