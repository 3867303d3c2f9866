#pragma once

// Internal: Eigen views over tensor storage.

#include <Eigen/Core>

namespace cxrnet::detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MatrixView = Eigen::Map<RowMatrix<T>>;

template <typename T>
using ConstMatrixView = Eigen::Map<const RowMatrix<T>>;

}  // namespace cxrnet::detail
