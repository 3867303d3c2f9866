#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cxrnet/layers.hpp"

namespace cxrnet {

/// Structure of the classifier:
///
///   Conv3x3(1->f0) ReLU MaxPool2 | Conv3x3(f0->f1) ReLU MaxPool2 | Flatten
///   Dense(->units) ReLU Dropout | Dense(->1) Sigmoid
///
/// Defaults: 128x128 grayscale input,
/// 64 and 128 filters, a 128-unit hidden layer and dropout 0.5.
struct ModelSpec {
  std::size_t image_size = 128;
  std::array<std::size_t, 2> conv_filters{64, 128};
  std::size_t dense_units = 128;
  double dropout_rate = 0.5;

  /// Throws ConfigError on a non-positive extent, an image size that is not
  /// a multiple of 4, or a dropout rate outside [0, 1).
  void validate() const;

  std::size_t flattened_features() const;

  /// Activation shapes from input to output for a batch of `batch` images:
  /// input, conv1, pool1, conv2, pool2, flatten, hidden, output.
  std::vector<Shape> shape_trace(std::size_t batch) const;

  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

template <typename T>
struct ForwardCache {
  Tensor<T> input;
  Tensor<T> conv1_act;  // after ReLU
  PoolSwitches pool1;
  Tensor<T> pooled1;
  Tensor<T> conv2_act;  // after ReLU
  PoolSwitches pool2;
  Tensor<T> flat;
  Tensor<T> hidden_act;  // after ReLU, before dropout
  Tensor<T> dropout_mask;
  Tensor<T> dropped;
  Tensor<T> probabilities;
};

template <typename T>
struct ForwardPass {
  Tensor<T> probabilities;  // [B,1]
  std::optional<ForwardCache<T>> cache;  // train mode only
};

template <typename T>
class Network {
 public:
  /// Glorot-uniform weights, zero biases, drawn from `init` in layer order.
  Network(const ModelSpec& spec, Prng& init);

  /// Zero-initialised network; used when parameters are loaded afterwards.
  explicit Network(const ModelSpec& spec);

  const ModelSpec& spec() const noexcept { return spec_; }

  /// In train mode dropout is active (needs `dropout_prng` when the rate is
  /// non-zero) and the returned pass carries the cache for backward().
  ForwardPass<T> forward(const Tensor<T>& batch, Mode mode,
                         Prng* dropout_prng = nullptr) const;

  /// Eval-mode probabilities, shape [B,1].
  Tensor<T> predict(const Tensor<T>& batch) const;

  /// Gradient of sum(grad_output * probabilities) for every parameter, in
  /// parameters() order. Throws StateError if `pass` has no cache.
  std::vector<Tensor<T>> backward(const ForwardPass<T>& pass,
                                  const Tensor<T>& grad_output) const;

  /// conv1.w, conv1.b, conv2.w, conv2.b, hidden.w, hidden.b, output.w, output.b
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;

  std::size_t parameter_count() const;

  Conv2D<T> conv1;
  Conv2D<T> conv2;
  Dense<T> hidden;
  Dense<T> output;

 private:
  void check_input(const Tensor<T>& batch) const;

  ModelSpec spec_;
};

}  // namespace cxrnet
