#pragma once

#include <cstddef>
#include <span>

#include "ann/autodiff/graph.hpp"
#include "ann/autodiff/tensor.hpp"

namespace ann::ad {

// [m x k] . [k x n] -> [m x n]
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);

// x . W^T for x [B x in], W [out x in] -> [B x out]. The weight layout matches
// the [fan_out x fan_in] convention used by every layer.
Tensor linear(Graph& g, const Tensor& x, const Tensor& weight);

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul_elem(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& a, double s);
// Sum of all elements, as a scalar tensor.
Tensor sum(Graph& g, const Tensor& a);

// x [B x n] + bias [n] broadcast over rows.
Tensor add_bias(Graph& g, const Tensor& x, const Tensor& bias);
// v [n] -> [rows x n]
Tensor broadcast_rows(Graph& g, const Tensor& v, std::size_t rows);
// x [B x F x T] -> x[:, :, t] as [B x F]
Tensor time_slice(Graph& g, const Tensor& x, std::size_t t);

/// Valid (unpadded) 1-D cross-correlation.
///
/// signal is [C_in x T] or batched [B x C_in x T]; kernels are
/// [C_out x C_in x K]. Output length is floor((T - K) / stride) + 1.
Tensor conv1d_valid(Graph& g, const Tensor& signal, const Tensor& kernels, std::size_t stride = 1);

// Mean over the batch of -log softmax(logits)[label], logits [B x C].
Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::span<const int> labels);

}  // namespace ann::ad
