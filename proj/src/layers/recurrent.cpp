#include "ann/layers/recurrent.hpp"

#include <string>

#include "ann/autodiff/ops.hpp"
#include "ann/errors.hpp"

namespace ann::layers {

Sequence sequence_from_signal(const ad::Tensor& signal) {
  if (signal.rank() != 2) {
    throw DimensionError("expected signal [B x T], got " + ad::to_string(signal.shape()));
  }
  const std::size_t batch = signal.dim(0), steps = signal.dim(1);
  auto sv = signal.values();
  Sequence seq;
  seq.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> column(batch);
    for (std::size_t b = 0; b < batch; ++b) column[b] = sv[b * steps + t];
    seq.emplace_back(ad::Shape{batch, 1}, std::move(column));
  }
  return seq;
}

Sequence unstack_time(ad::Graph& g, const ad::Tensor& x) {
  Sequence seq;
  seq.reserve(x.dim(2));
  for (std::size_t t = 0; t < x.dim(2); ++t) seq.push_back(ad::time_slice(g, x, t));
  return seq;
}

namespace {

ad::Tensor initial_state(ad::Graph& g, const ad::Tensor& h0, std::size_t batch, std::size_t hidden) {
  if (h0.rank() == 1 && h0.dim(0) == hidden) return ad::broadcast_rows(g, h0, batch);
  if (h0.rank() == 2 && h0.dim(0) == batch && h0.dim(1) == hidden) return h0;
  throw DimensionError("initial state " + ad::to_string(h0.shape()) + " does not fit batch " +
                       std::to_string(batch) + " with hidden size " + std::to_string(hidden));
}

// act(pre + W_rec h (+ bias)), shared by both recurrences so that a factor-1
// HS layer performs exactly the same floating-point operations as an RNN.
ad::Tensor recur(ad::Graph& g, ad::Tensor pre, const ad::Tensor& h, const ad::Tensor& w_rec,
                 const std::optional<ad::Tensor>& bias, const nn::ActivationSpec& act) {
  pre = ad::add(g, pre, ad::linear(g, h, w_rec));
  if (bias) pre = ad::add_bias(g, pre, *bias);
  return nn::activate(g, pre, act);
}

}  // namespace

Sequence rnn_forward(ad::Graph& g, const RnnCell& cell, const Sequence& x, const ad::Tensor& h0) {
  if (x.empty()) throw EmptySequenceError("rnn_forward: empty input sequence");
  const std::size_t batch = x.front().dim(0);
  ad::Tensor h = initial_state(g, h0, batch, cell.hidden_size());
  Sequence out;
  out.reserve(x.size());
  for (const auto& xt : x) {
    h = recur(g, ad::linear(g, xt, cell.w_in), h, cell.w_rec, cell.bias, cell.activation);
    out.push_back(h);
  }
  return out;
}

void validate(const HsLayer& layer) {
  if (layer.w_pos.empty()) throw StructuralError("HS layer has no position matrices");
  const auto& shape = layer.w_pos.front().shape();
  for (std::size_t j = 0; j < layer.w_pos.size(); ++j) {
    if (layer.w_pos[j].shape() != shape) {
      throw StructuralError("HS layer position matrix " + std::to_string(j) + " has shape " +
                            ad::to_string(layer.w_pos[j].shape()) + ", expected " + ad::to_string(shape));
    }
  }
  if (shape.size() != 2 || layer.w_rec.shape() != ad::Shape{shape[0], shape[0]}) {
    throw StructuralError("HS layer recurrent matrix " + ad::to_string(layer.w_rec.shape()) +
                          " does not match position matrices " + ad::to_string(shape));
  }
}

std::size_t hs_output_length(std::size_t steps, std::size_t factor) {
  if (factor == 0) throw ConfigError("subsampling factor must be positive");
  return (steps + factor - 1) / factor;
}

Sequence hs_layer_forward(ad::Graph& g, const HsLayer& layer, const Sequence& x, const ad::Tensor& h0) {
  validate(layer);
  if (x.empty()) throw EmptySequenceError("hs_layer_forward: empty input sequence");
  const std::size_t k = layer.factor();
  const std::size_t segments = hs_output_length(x.size(), k);
  const std::size_t batch = x.front().dim(0);
  ad::Tensor h = initial_state(g, h0, batch, layer.hidden_size());
  Sequence out;
  out.reserve(segments);
  for (std::size_t s = 0; s < segments; ++s) {
    // Positions past the end are zero padding and contribute nothing.
    const std::size_t begin = s * k;
    const std::size_t end = std::min(begin + k, x.size());
    ad::Tensor pre = ad::linear(g, x[begin], layer.w_pos[0]);
    for (std::size_t t = begin + 1; t < end; ++t) pre = ad::add(g, pre, ad::linear(g, x[t], layer.w_pos[t - begin]));
    h = recur(g, pre, h, layer.w_rec, layer.bias, layer.activation);
    out.push_back(h);
  }
  return out;
}

ad::Tensor dense_forward(ad::Graph& g, const Dense& layer, const ad::Tensor& x) {
  ad::Tensor y = ad::linear(g, x, layer.weight);
  if (layer.bias) y = ad::add_bias(g, y, *layer.bias);
  if (layer.activation) y = nn::activate(g, y, *layer.activation);
  return y;
}

}  // namespace ann::layers
