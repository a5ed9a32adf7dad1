#include "ann/nn/init.hpp"

#include <cmath>
#include <string>

#include "ann/errors.hpp"

namespace ann::nn {

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::uniform_nonneg: return "uniform_nonneg";
    case InitKind::xavier_uniform: return "xavier_uniform";
    case InitKind::abs_xavier_uniform: return "abs_xavier_uniform";
  }
  return "unknown";
}

InitKind parse_init_kind(std::string_view name) {
  if (name == "uniform_nonneg") return InitKind::uniform_nonneg;
  if (name == "xavier_uniform") return InitKind::xavier_uniform;
  if (name == "abs_xavier_uniform") return InitKind::abs_xavier_uniform;
  throw ConfigError("unknown init '" + std::string(name) +
                    "' (valid: uniform_nonneg, xavier_uniform, abs_xavier_uniform)");
}

void validate(const InitSpec& spec) {
  if (!(spec.scale > 0.0)) {
    throw ConfigError(std::string(to_string(spec.kind)) + " needs a positive " +
                      (spec.kind == InitKind::uniform_nonneg ? "upper bound c" : "gain") + ", got " +
                      std::to_string(spec.scale));
  }
}

ad::Tensor init_uniform_nonneg(const ad::Shape& shape, double c, Rng& rng) {
  if (!(c > 0.0)) throw ConfigError("uniform_nonneg needs c > 0, got " + std::to_string(c));
  ad::Tensor out(shape);
  std::uniform_real_distribution<double> dist(0.0, c);
  for (double& v : out.values()) v = dist(rng);
  return out;
}

double xavier_bound(const ad::Shape& shape, double gain) {
  if (!(gain > 0.0)) throw ConfigError("xavier init needs gain > 0, got " + std::to_string(gain));
  std::size_t fan_out = 0, fan_in = 0;
  if (shape.size() == 1) {
    fan_out = shape[0];
    fan_in = 1;
  } else if (shape.size() == 2) {
    fan_out = shape[0];
    fan_in = shape[1];
  } else {
    throw ConfigError("xavier init needs a vector or matrix shape, got " + ad::to_string(shape));
  }
  if (fan_in == 0 || fan_out == 0) throw ConfigError("xavier init with zero fan: " + ad::to_string(shape));
  return gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ad::Tensor init_xavier_uniform(const ad::Shape& shape, double gain, Rng& rng) {
  const double a = xavier_bound(shape, gain);
  ad::Tensor out(shape);
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : out.values()) v = dist(rng);
  return out;
}

ad::Tensor init_abs_xavier(const ad::Shape& shape, double gain, Rng& rng) {
  ad::Tensor out = init_xavier_uniform(shape, gain, rng);
  for (double& v : out.values()) v = std::abs(v);
  return out;
}

ad::Tensor initialize(const ad::Shape& shape, const InitSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case InitKind::uniform_nonneg: return init_uniform_nonneg(shape, spec.scale, rng);
    case InitKind::xavier_uniform: return init_xavier_uniform(shape, spec.scale, rng);
    case InitKind::abs_xavier_uniform: return init_abs_xavier(shape, spec.scale, rng);
  }
  throw ConfigError("unhandled init kind");
}

void project_unit_interval(ad::Tensor& t) {
  for (double& v : t.values()) {
    if (v < 0.0) v = 0.0;
    else if (v > 1.0) v = 1.0;
  }
}

void project_unit_interval(std::span<ad::Tensor> tensors) {
  for (auto& t : tensors) project_unit_interval(t);
}

}  // namespace ann::nn
