#include "ann/autodiff/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "ann/errors.hpp"

namespace ann::ad {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, bool requires_grad) : storage_(std::make_shared<Storage>()) {
  storage_->values.assign(element_count(shape), 0.0);
  storage_->shape = std::move(shape);
  storage_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  if (values.size() != element_count(shape)) {
    throw DimensionError("tensor of shape " + to_string(shape) + " needs " +
                         std::to_string(element_count(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  storage_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

Tensor::Storage& Tensor::storage() const {
  if (!storage_) throw ContractError("use of an undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return storage().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return storage().values.size(); }

std::span<double> Tensor::values() { return storage().values; }
std::span<const double> Tensor::values() const { return storage().values; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return storage().values.front();
}

bool Tensor::requires_grad() const { return storage().requires_grad; }
void Tensor::set_requires_grad(bool flag) { storage().requires_grad = flag; }
bool Tensor::is_leaf() const { return storage().leaf; }

bool Tensor::has_grad() const { return !storage().grad.empty(); }
std::span<double> Tensor::grad() { return storage().grad; }
std::span<const double> Tensor::grad() const { return storage().grad; }

void Tensor::zero_grad() {
  auto& s = storage();
  s.grad.assign(s.values.size(), 0.0);
}

void Tensor::clear_grad() {
  auto& s = storage();
  s.grad.clear();
  s.grad.shrink_to_fit();
}

Tensor Tensor::clone() const {
  Tensor out(shape(), std::vector<double>(values().begin(), values().end()), requires_grad());
  return out;
}

}  // namespace ann::ad
