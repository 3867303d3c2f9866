#include "cxrnet/tensor.hpp"

#include <limits>

#include "cxrnet/linalg.hpp"

namespace cxrnet {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::input: return "input";
    case ErrorCategory::state: return "state";
    case ErrorCategory::layout: return "layout";
    case ErrorCategory::decode: return "decode";
    case ErrorCategory::format: return "format";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::config: return "config";
  }
  return "unknown";
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("shape must have at least one extent");
  std::size_t count = 1;
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw ShapeError("shape " + to_string(shape) + " has a zero extent");
    }
    if (count > std::numeric_limits<std::size_t>::max() / extent) {
      throw ShapeError("shape " + to_string(shape) + " overflows size_t");
    }
    count *= extent;
  }
}

std::size_t element_count(const Shape& shape) noexcept {
  if (shape.empty()) return 0;
  std::size_t count = 1;
  for (std::size_t extent : shape) count *= extent;
  return count;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul extents do not agree: " + to_string(a.shape()) +
                     " x " + to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Tensor<T> out({a.dim(0), b.dim(1)});
  detail::MatrixView<T>(out.raw(), m, n).noalias() =
      detail::ConstMatrixView<T>(a.raw(), m, k) *
      detail::ConstMatrixView<T>(b.raw(), k, n);
  return out;
}

template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);

}  // namespace cxrnet
