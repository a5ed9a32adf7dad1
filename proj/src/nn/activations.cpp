#include "ann/nn/activations.hpp"

#include <cmath>

#include "ann/errors.hpp"

namespace ann::nn {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::offset_relu: return "offset_relu";
    case ActivationKind::offset_abs: return "offset_abs";
    case ActivationKind::tanh: return "tanh";
  }
  return "unknown";
}

ActivationKind parse_activation_kind(std::string_view name) {
  if (name == "offset_relu") return ActivationKind::offset_relu;
  if (name == "offset_abs") return ActivationKind::offset_abs;
  if (name == "tanh") return ActivationKind::tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (valid: offset_relu, offset_abs, tanh)");
}

ad::Tensor offset_relu(ad::Graph& g, const ad::Tensor& x, double c) {
  ad::Tensor out(x.shape());
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > c ? xv[i] - c : 0.0;
  return g.emit(ad::OpKind::offset_relu, {x}, out, [x, c](std::span<const double> go) mutable {
    auto gx = ad::Graph::grad_of(x);
    auto xv = x.values();
    for (std::size_t i = 0; i < go.size(); ++i)
      if (xv[i] > c) gx[i] += go[i];
  });
}

ad::Tensor offset_abs(ad::Graph& g, const ad::Tensor& x, double c) {
  ad::Tensor out(x.shape());
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::abs(xv[i] - c);
  return g.emit(ad::OpKind::offset_abs, {x}, out, [x, c](std::span<const double> go) mutable {
    auto gx = ad::Graph::grad_of(x);
    auto xv = x.values();
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double d = xv[i] - c;
      if (d > 0.0) gx[i] += go[i];
      else if (d < 0.0) gx[i] -= go[i];
    }
  });
}

ad::Tensor tanh(ad::Graph& g, const ad::Tensor& x) {
  ad::Tensor out(x.shape());
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(xv[i]);
  return g.emit(ad::OpKind::tanh, {x}, out, [x, out](std::span<const double> go) mutable {
    auto gx = ad::Graph::grad_of(x);
    auto ov = out.values();
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (1.0 - ov[i] * ov[i]);
  });
}

ad::Tensor activate(ad::Graph& g, const ad::Tensor& x, const ActivationSpec& spec) {
  switch (spec.kind) {
    case ActivationKind::offset_relu: return offset_relu(g, x, spec.offset);
    case ActivationKind::offset_abs: return offset_abs(g, x, spec.offset);
    case ActivationKind::tanh: return tanh(g, x);
  }
  throw ConfigError("unhandled activation kind");
}

}  // namespace ann::nn
