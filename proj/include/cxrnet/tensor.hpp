#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cxrnet/errors.hpp"
#include "cxrnet/prng.hpp"

namespace cxrnet {

/// Allocator with a fixed 64-byte alignment. Vectorised kernels choose
/// their loop peeling from the buffer address, so a fixed alignment keeps
/// floating-point summation order, and hence results, identical run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), alignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Ordered list of extents. A valid shape is non-empty with every extent >= 1.
using Shape = std::vector<std::size_t>;

/// Throws ShapeError unless `shape` is non-empty, has no zero extent and its
/// element count fits in size_t.
void validate_shape(const Shape& shape);
std::size_t element_count(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

/// Dense row-major array (last axis fastest). Images and activations use
/// [batch, channel, height, width].
///
/// A default-constructed tensor is the empty placeholder: no shape, no data.
/// Every other tensor satisfies `size() == element_count(shape())`.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(element_count(shape_), T{0});
  }

  Tensor(Shape shape, const std::vector<T>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    validate_shape(shape_);
    if (data_.size() != element_count(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Multi-index access. The number of indices must equal rank().
  template <typename... Idx>
  T& at(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  const T& at(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  void fill(T value) noexcept { std::fill(data_.begin(), data_.end(), value); }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const& {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }
  Tensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }

  void reshape(Shape shape) {
    validate_shape(shape);
    if (element_count(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " +
                       to_string(shape));
    }
    shape_ = std::move(shape);
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.size()) {
      throw ShapeError("index rank " + std::to_string(idx.size()) +
                       " does not match tensor rank " +
                       std::to_string(shape_.size()));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) {
      if (i >= shape_[axis]) throw ShapeError("index out of range");
      flat = flat * shape_[axis] + i;
      ++axis;
    }
    return flat;
  }

  Shape shape_;
  AlignedVector<T> data_;
};

template <typename T>
Tensor<T> zeros(const Shape& shape) {
  return Tensor<T>(shape);
}

template <typename T>
Tensor<T> full(const Shape& shape, T value) {
  Tensor<T> out(shape);
  out.fill(value);
  return out;
}

/// Rank-2 product: [m,k] x [k,n] -> [m,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
bool all_finite(const Tensor<T>& t) noexcept {
  for (T v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// Throws NumericError naming `what` if any element is NaN or infinite.
template <typename T>
void require_finite(const Tensor<T>& t, const std::string& what) {
  if (!all_finite(t)) throw NumericError(what + " contains NaN or Inf");
}

/// Elementwise f(a[i]). Throws NumericError if f produces a non-finite value.
template <typename T, typename F>
Tensor<T> map(const Tensor<T>& a, F&& f) {
  Tensor<T> out = a;
  for (T& v : out.data()) v = static_cast<T>(f(v));
  require_finite(out, "map result");
  return out;
}

/// Elementwise f(a[i], b[i]); shapes must match exactly.
template <typename T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F&& f) {
  if (a.shape() != b.shape()) {
    throw ShapeError("zip shape mismatch: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  Tensor<T> out = a;
  auto dst = out.data();
  auto rhs = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<T>(f(dst[i], rhs[i]));
  }
  require_finite(out, "zip result");
  return out;
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> data(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) data[i] = static_cast<To>(t[i]);
  return Tensor<To>(t.shape(), std::move(data));
}

/// I.i.d. uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(const Shape& shape, std::size_t fan_in,
                         std::size_t fan_out, Prng& prng) {
  if (fan_in == 0 || fan_out == 0) {
    throw InputError("glorot_uniform: fan_in and fan_out must be >= 1");
  }
  Tensor<T> out(shape);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (T& v : out.data()) v = static_cast<T>(prng.uniform(-limit, limit));
  return out;
}

}  // namespace cxrnet
