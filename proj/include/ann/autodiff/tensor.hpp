#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ann::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major buffer of doubles with an optional gradient buffer.
///
/// A Tensor is a handle: copies share storage, so a parameter held by a layer
/// and the same parameter listed by Model::parameters() are one object. Use
/// clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(storage_); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<double> values();
  std::span<const double> values() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  // True for tensors not produced by a recorded operation.
  bool is_leaf() const;

  bool has_grad() const;
  std::span<double> grad();
  std::span<const double> grad() const;
  // Allocates (if absent) and zero-fills the gradient buffer.
  void zero_grad();
  void clear_grad();

  Tensor clone() const;
  bool shares_storage(const Tensor& other) const noexcept { return storage_ == other.storage_; }

 private:
  friend class Graph;

  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = true;
  };

  Storage& storage() const;

  std::shared_ptr<Storage> storage_;
};

}  // namespace ann::ad
