#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ann/autodiff/graph.hpp"
#include "ann/autodiff/tensor.hpp"
#include "ann/nn/activations.hpp"

namespace ann::layers {

// One [B x features] tensor per time step.
using Sequence = std::vector<ad::Tensor>;

// Splits data [B x T] into T leaf steps of shape [B x 1]. For inputs only; no
// gradient flows back into `signal`.
Sequence sequence_from_signal(const ad::Tensor& signal);
// Splits a recorded [B x F x T] tensor into T steps of [B x F].
Sequence unstack_time(ad::Graph& g, const ad::Tensor& x);

/// h_t = act(W_in x_t + W_rec h_{t-1} (+ bias)).
struct RnnCell {
  ad::Tensor w_in;   // [H x D]
  ad::Tensor w_rec;  // [H x H]
  std::optional<ad::Tensor> bias;  // [H], unconstrained models only
  nn::ActivationSpec activation;

  std::size_t hidden_size() const { return w_rec.dim(0); }
  std::size_t input_size() const { return w_in.dim(1); }
};

// h0 is [H] (shared across the batch) or [B x H]. Returns h_1..h_T.
Sequence rnn_forward(ad::Graph& g, const RnnCell& cell, const Sequence& x, const ad::Tensor& h0);

/// Hierarchical subsampling layer: the input is cut into non-overlapping
/// segments of `factor` steps; element j of a segment goes through its own
/// matrix W_pos[j], the results are summed with the recurrent term.
struct HsLayer {
  std::vector<ad::Tensor> w_pos;  // factor x [H_out x H_in]
  ad::Tensor w_rec;               // [H_out x H_out]
  std::optional<ad::Tensor> bias;
  nn::ActivationSpec activation;

  std::size_t factor() const { return w_pos.size(); }
  std::size_t hidden_size() const { return w_rec.dim(0); }
  std::size_t input_size() const { return w_pos.front().dim(1); }
};

void validate(const HsLayer& layer);

// ceil(steps / factor): a ragged tail is zero-padded into a full segment.
std::size_t hs_output_length(std::size_t steps, std::size_t factor);

Sequence hs_layer_forward(ad::Graph& g, const HsLayer& layer, const Sequence& x, const ad::Tensor& h0);

struct Dense {
  ad::Tensor weight;  // [out x in]
  std::optional<ad::Tensor> bias;
  std::optional<nn::ActivationSpec> activation;  // absent for the linear output layer
};

ad::Tensor dense_forward(ad::Graph& g, const Dense& layer, const ad::Tensor& x);

}  // namespace ann::layers
