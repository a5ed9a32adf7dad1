#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ann/autodiff/graph.hpp"
#include "ann/autodiff/tensor.hpp"
#include "ann/layers/recurrent.hpp"
#include "ann/layers/sinc.hpp"
#include "ann/nn/activations.hpp"
#include "ann/nn/init.hpp"

namespace ann::layers {

enum class Variant { rnn, hsrnn, sinc_hsrnn };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

// "8-16-32" <-> {8, 16, 32}
std::vector<std::size_t> parse_sizes(std::string_view text);
std::string format_sizes(const std::vector<std::size_t>& sizes);

struct SincSpec {
  std::size_t channels = 5;
  std::size_t kernel_size = 101;
  double f_min = 30.0;
  double f_max = 0.0;  // 0 = Nyquist
};

/// Declarative architecture description. Everything needed to rebuild a model
/// from a parameter table.
struct ModelSpec {
  Variant variant = Variant::rnn;
  std::vector<std::size_t> hidden_sizes{8};
  std::vector<std::size_t> dense_sizes;
  bool constrained = true;
  nn::ActivationSpec activation{nn::ActivationKind::offset_abs, 0.05};
  nn::InitSpec init{nn::InitKind::uniform_nonneg, 0.05};
  std::size_t subsample_factor = 8;
  double sample_rate = 1000.0;
  SincSpec sinc;
  std::size_t n_classes = 2;
  // Initial hidden states are drawn from U(0, h0_scale). The RNN always uses a
  // random state; HS layers start from zero unless hs_random_h0 is set.
  double h0_scale = 0.05;
  bool hs_random_h0 = false;

  bool has_bias() const { return !constrained; }
};

void validate(const ModelSpec& spec);

enum class ParamRole {
  weight,     // transmission coefficient, projected in constrained mode
  bias,       // unconstrained models only
  frequency,  // sinc band parameters (Hz), never projected
  state,      // fixed initial hidden state, not trained
};

std::string_view to_string(ParamRole role);

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
  ParamRole role;
};

// Intermediate values of one forward pass.
struct ForwardTrace {
  std::optional<ad::Tensor> filtered;  // sinc output [B x C x T']
  std::vector<Sequence> recurrent;     // one sequence per recurrent layer
  std::vector<ad::Tensor> dense;       // hidden dense outputs
  ad::Tensor logits;
};

class Model {
 public:
  // Fresh parameters drawn from spec.init with the given seed. Values are
  // rounded to float32, the storage precision of checkpoints.
  static Model create(const ModelSpec& spec, std::uint64_t seed);
  // Rebuilds a model from a parameter table (e.g. a checkpoint). Every
  // expected name must be present with the expected shape.
  static Model from_parameters(const ModelSpec& spec,
                               const std::vector<std::pair<std::string, ad::Tensor>>& table);

  const ModelSpec& spec() const { return spec_; }

  // intensity [B x T] -> logits [B x n_classes]
  ad::Tensor forward(ad::Graph& g, const ad::Tensor& intensity) const;
  ForwardTrace trace(ad::Graph& g, const ad::Tensor& intensity) const;

  std::vector<NamedParameter> parameters() const;
  std::vector<ad::Tensor> trainable() const;
  std::vector<ad::Tensor> weights() const;
  std::size_t parameter_count() const;

  void zero_grad();
  void round_to_storage();
  Model clone() const;

  const std::optional<SincFilterBank>& sinc() const { return sinc_; }
  const std::optional<RnnCell>& rnn() const { return rnn_; }
  const std::vector<HsLayer>& hs_layers() const { return hs_; }
  const std::vector<Dense>& dense_layers() const { return dense_; }
  const Dense& output_layer() const { return dense_.back(); }

 private:
  Model() = default;
  void build_skeleton();

  ModelSpec spec_;
  std::optional<SincFilterBank> sinc_;
  std::optional<RnnCell> rnn_;
  ad::Tensor rnn_h0_;
  std::vector<HsLayer> hs_;
  std::vector<ad::Tensor> hs_h0_;
  // Hidden dense layers followed by the linear output layer.
  std::vector<Dense> dense_;
};

}  // namespace ann::layers
