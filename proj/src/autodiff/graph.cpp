#include "ann/autodiff/graph.hpp"

#include <algorithm>

#include "ann/errors.hpp"

namespace ann::ad {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::matmul: return "matmul";
    case OpKind::linear: return "linear";
    case OpKind::add: return "add";
    case OpKind::mul_elem: return "mul_elem";
    case OpKind::scale: return "scale";
    case OpKind::sum: return "sum";
    case OpKind::add_bias: return "add_bias";
    case OpKind::broadcast_rows: return "broadcast_rows";
    case OpKind::time_slice: return "time_slice";
    case OpKind::conv1d_valid: return "conv1d_valid";
    case OpKind::softmax_cross_entropy: return "softmax_cross_entropy";
    case OpKind::offset_relu: return "offset_relu";
    case OpKind::offset_abs: return "offset_abs";
    case OpKind::tanh: return "tanh";
    case OpKind::sinc_kernels: return "sinc_kernels";
    case OpKind::custom: return "custom";
  }
  return "unknown";
}

Tensor Graph::emit(OpKind kind, std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
  if (!recording()) return output;
  const bool needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                      [](const Tensor& t) { return t.requires_grad(); });
  if (!needs_grad) return output;
  auto& st = output.storage();
  st.leaf = false;
  st.requires_grad = true;
  entries_.push_back(Entry{kind, std::move(inputs), output, std::move(backward)});
  return output;
}

std::span<double> Graph::grad_of(const Tensor& t) {
  auto& st = t.storage();
  if (st.grad.empty()) st.grad.assign(st.values.size(), 0.0);
  return st.grad;
}

void Graph::backward(const Tensor& loss) {
  if (backward_done_) throw ContractError("backward() already ran on this graph");
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (loss.is_leaf() || entries_.empty() ||
      std::none_of(entries_.begin(), entries_.end(),
                   [&](const Entry& e) { return e.output.shares_storage(loss); })) {
    throw ContractError("backward() on a loss that was not recorded on this graph");
  }
  backward_done_ = true;

  // Every participating leaf ends up with a populated gradient, zero when the
  // loss does not depend on it.
  for (auto& e : entries_) {
    for (auto& in : e.inputs) {
      if (in.is_leaf() && in.requires_grad()) grad_of(in);
    }
  }

  Tensor seed = loss;
  grad_of(seed)[0] += 1.0;

  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward(it->output.grad());
  }
}

}  // namespace ann::ad
