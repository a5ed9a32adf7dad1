#include "ann/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ann/errors.hpp"

namespace ann::ad {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

}  // namespace

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " . " +
                         to_string(b.shape()));
  }
  Tensor out(Shape{m, n});
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
    }
  }
  return g.emit(OpKind::matmul, {a, b}, out, [a, b, m, k, n](std::span<const double> go) mutable {
    if (a.requires_grad()) {
      auto ga = Graph::grad_of(a);
      auto bv = b.values();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (b.requires_grad()) {
      auto gb = Graph::grad_of(b);
      auto av = a.values();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
        }
    }
  });
}

Tensor linear(Graph& g, const Tensor& x, const Tensor& weight) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const std::size_t batch = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in) {
    throw DimensionError("linear: input " + to_string(x.shape()) + " does not match weight " +
                         to_string(weight.shape()));
  }
  Tensor out(Shape{batch, out_dim});
  auto xv = x.values();
  auto wv = weight.values();
  auto ov = out.values();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = &xv[b * in];
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* wr = &wv[o * in];
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      ov[b * out_dim + o] = acc;
    }
  }
  return g.emit(OpKind::linear, {x, weight}, out,
                [x, weight, batch, in, out_dim](std::span<const double> go) mutable {
                  if (x.requires_grad()) {
                    auto gx = Graph::grad_of(x);
                    auto wv = weight.values();
                    for (std::size_t b = 0; b < batch; ++b)
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const double gbo = go[b * out_dim + o];
                        if (gbo == 0.0) continue;
                        for (std::size_t i = 0; i < in; ++i) gx[b * in + i] += gbo * wv[o * in + i];
                      }
                  }
                  if (weight.requires_grad()) {
                    auto gw = Graph::grad_of(weight);
                    auto xv = x.values();
                    for (std::size_t b = 0; b < batch; ++b)
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const double gbo = go[b * out_dim + o];
                        if (gbo == 0.0) continue;
                        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += gbo * xv[b * in + i];
                      }
                  }
                });
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  return g.emit(OpKind::add, {a, b}, out, [a, b](std::span<const double> go) mutable {
    for (const Tensor* t : {&a, &b}) {
      if (!t->requires_grad()) continue;
      auto gt = Graph::grad_of(*t);
      for (std::size_t i = 0; i < go.size(); ++i) gt[i] += go[i];
    }
  });
}

Tensor mul_elem(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul_elem");
  Tensor out(a.shape());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  return g.emit(OpKind::mul_elem, {a, b}, out, [a, b](std::span<const double> go) mutable {
    if (a.requires_grad()) {
      auto ga = Graph::grad_of(a);
      auto bv = b.values();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = Graph::grad_of(b);
      auto av = a.values();
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Tensor scale(Graph& g, const Tensor& a, double s) {
  Tensor out(a.shape());
  auto av = a.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = s * av[i];
  return g.emit(OpKind::scale, {a}, out, [a, s](std::span<const double> go) mutable {
    auto ga = Graph::grad_of(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += s * go[i];
  });
}

Tensor sum(Graph& g, const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return g.emit(OpKind::sum, {a}, Tensor::scalar(acc), [a](std::span<const double> go) mutable {
    auto ga = Graph::grad_of(a);
    for (double& v : ga) v += go[0];
  });
}

Tensor add_bias(Graph& g, const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_bias");
  require_rank(bias, 1, "add_bias");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (bias.dim(0) != cols) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " does not match " +
                         to_string(x.shape()));
  }
  Tensor out(x.shape());
  auto xv = x.values();
  auto bv = bias.values();
  auto ov = out.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) ov[r * cols + c] = xv[r * cols + c] + bv[c];
  return g.emit(OpKind::add_bias, {x, bias}, out, [x, bias, rows, cols](std::span<const double> go) mutable {
    if (x.requires_grad()) {
      auto gx = Graph::grad_of(x);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    }
    if (bias.requires_grad()) {
      auto gb = Graph::grad_of(bias);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += go[r * cols + c];
    }
  });
}

Tensor broadcast_rows(Graph& g, const Tensor& v, std::size_t rows) {
  require_rank(v, 1, "broadcast_rows");
  const std::size_t cols = v.dim(0);
  Tensor out(Shape{rows, cols});
  auto vv = v.values();
  auto ov = out.values();
  for (std::size_t r = 0; r < rows; ++r) std::copy(vv.begin(), vv.end(), ov.begin() + r * cols);
  return g.emit(OpKind::broadcast_rows, {v}, out, [v, rows, cols](std::span<const double> go) mutable {
    auto gv = Graph::grad_of(v);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gv[c] += go[r * cols + c];
  });
}

Tensor time_slice(Graph& g, const Tensor& x, std::size_t t) {
  require_rank(x, 3, "time_slice");
  const std::size_t batch = x.dim(0), features = x.dim(1), steps = x.dim(2);
  if (t >= steps) {
    throw DimensionError("time_slice: step " + std::to_string(t) + " out of range for " +
                         to_string(x.shape()));
  }
  Tensor out(Shape{batch, features});
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t f = 0; f < features; ++f) ov[b * features + f] = xv[(b * features + f) * steps + t];
  return g.emit(OpKind::time_slice, {x}, out,
                [x, t, batch, features, steps](std::span<const double> go) mutable {
                  auto gx = Graph::grad_of(x);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t f = 0; f < features; ++f)
                      gx[(b * features + f) * steps + t] += go[b * features + f];
                });
}

Tensor conv1d_valid(Graph& g, const Tensor& signal, const Tensor& kernels, std::size_t stride) {
  if (stride == 0) throw DimensionError("conv1d_valid: stride must be positive");
  require_rank(kernels, 3, "conv1d_valid kernels");
  const bool batched = signal.rank() == 3;
  if (!batched && signal.rank() != 2) {
    throw DimensionError("conv1d_valid: signal must be [C_in x T] or [B x C_in x T], got " +
                         to_string(signal.shape()));
  }
  const std::size_t batch = batched ? signal.dim(0) : 1;
  const std::size_t c_in = signal.dim(batched ? 1 : 0);
  const std::size_t len = signal.dim(batched ? 2 : 1);
  const std::size_t c_out = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != c_in) {
    throw DimensionError("conv1d_valid: signal " + to_string(signal.shape()) + " has " +
                         std::to_string(c_in) + " channels but kernels " + to_string(kernels.shape()) +
                         " expect " + std::to_string(kernels.dim(1)));
  }
  if (k > len) {
    throw InputTooShortError("conv1d_valid: kernel length " + std::to_string(k) +
                             " exceeds signal length " + std::to_string(len));
  }
  const std::size_t out_len = (len - k) / stride + 1;
  Tensor out(batched ? Shape{batch, c_out, out_len} : Shape{c_out, out_len});
  auto sv = signal.values();
  auto kv = kernels.values();
  auto ov = out.values();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t co = 0; co < c_out; ++co) {
      double* orow = &ov[(b * c_out + co) * out_len];
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double* srow = &sv[(b * c_in + ci) * len];
        const double* krow = &kv[(co * c_in + ci) * k];
        for (std::size_t t = 0; t < out_len; ++t) {
          const double* s = srow + t * stride;
          double acc = 0.0;
          for (std::size_t j = 0; j < k; ++j) acc += s[j] * krow[j];
          orow[t] += acc;
        }
      }
    }
  return g.emit(
      OpKind::conv1d_valid, {signal, kernels}, out,
      [signal, kernels, batch, c_in, c_out, len, k, stride, out_len](std::span<const double> go) mutable {
        auto sv = signal.values();
        auto kv = kernels.values();
        if (kernels.requires_grad()) {
          auto gk = Graph::grad_of(kernels);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t co = 0; co < c_out; ++co) {
              const double* grow = &go[(b * c_out + co) * out_len];
              for (std::size_t ci = 0; ci < c_in; ++ci) {
                const double* srow = &sv[(b * c_in + ci) * len];
                double* gkrow = &gk[(co * c_in + ci) * k];
                for (std::size_t j = 0; j < k; ++j) {
                  double acc = 0.0;
                  for (std::size_t t = 0; t < out_len; ++t) acc += grow[t] * srow[t * stride + j];
                  gkrow[j] += acc;
                }
              }
            }
        }
        if (signal.requires_grad()) {
          auto gs = Graph::grad_of(signal);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t co = 0; co < c_out; ++co) {
              const double* grow = &go[(b * c_out + co) * out_len];
              for (std::size_t ci = 0; ci < c_in; ++ci) {
                double* gsrow = &gs[(b * c_in + ci) * len];
                const double* krow = &kv[(co * c_in + ci) * k];
                for (std::size_t t = 0; t < out_len; ++t) {
                  const double gt = grow[t];
                  double* dst = gsrow + t * stride;
                  for (std::size_t j = 0; j < k; ++j) dst[j] += gt * krow[j];
                }
              }
            }
        }
      });
}

Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         to_string(logits.shape()));
  }
  if (batch == 0) throw DimensionError("softmax_cross_entropy: empty batch");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw LabelError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  auto lv = logits.values();
  std::vector<double> probs(lv.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = &lv[b * classes];
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[b * classes + c] = std::exp(row[c] - mx);
      z += probs[b * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] /= z;
    loss += std::log(z) + mx - row[labels[b]];
  }
  loss /= static_cast<double>(batch);
  std::vector<int> saved_labels(labels.begin(), labels.end());
  return g.emit(OpKind::softmax_cross_entropy, {logits}, Tensor::scalar(loss),
                [logits, probs = std::move(probs), saved_labels = std::move(saved_labels), batch,
                 classes](std::span<const double> go) mutable {
                  auto gl = Graph::grad_of(logits);
                  const double s = go[0] / static_cast<double>(batch);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t c = 0; c < classes; ++c) {
                      const double onehot = static_cast<int>(c) == saved_labels[b] ? 1.0 : 0.0;
                      gl[b * classes + c] += s * (probs[b * classes + c] - onehot);
                    }
                });
}

}  // namespace ann::ad
