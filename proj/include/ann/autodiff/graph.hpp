#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ann/autodiff/tensor.hpp"

namespace ann::ad {

enum class OpKind {
  matmul,
  linear,
  add,
  mul_elem,
  scale,
  sum,
  add_bias,
  broadcast_rows,
  time_slice,
  conv1d_valid,
  softmax_cross_entropy,
  offset_relu,
  offset_abs,
  tanh,
  sinc_kernels,
  custom,
};

std::string_view to_string(OpKind kind);

/// Reverse-mode tape. Operations append entries in execution order, so every
/// entry's inputs are leaves or outputs of earlier entries; backward() walks the
/// entries once, last to first.
///
/// A graph is single-use: a second backward() throws. Inference graphs never
/// record and exist only so forward code has one signature.
class Graph {
 public:
  enum class Mode { record, inference };

  // Receives the gradient of the loss w.r.t. the entry's output and must add
  // contributions into the gradients of inputs that require them.
  using BackwardFn = std::function<void(std::span<const double> output_grad)>;

  struct Entry {
    OpKind kind;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  explicit Graph(Mode mode = Mode::record) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return mode_ == Mode::record; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  // Marks `output` as produced by `kind` and records it when any input needs a
  // gradient. Returns `output` for chaining.
  Tensor emit(OpKind kind, std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  void backward(const Tensor& loss);

  // Gradient buffer of `t`, allocated as zeros on first use.
  static std::span<double> grad_of(const Tensor& t);

 private:
  Mode mode_;
  bool backward_done_ = false;
  std::vector<Entry> entries_;
};

}  // namespace ann::ad
