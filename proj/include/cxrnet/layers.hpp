#pragma once

#include <cstddef>
#include <vector>

#include "cxrnet/prng.hpp"
#include "cxrnet/tensor.hpp"

namespace cxrnet {

enum class Mode { train, eval };

/// Convolutions are 3x3, stride 1, zero "same" padding.
inline constexpr std::size_t kKernelSize = 3;

template <typename T>
struct Conv2D {
  Tensor<T> weights;  // [out_ch, in_ch, 3, 3]
  Tensor<T> bias;     // [out_ch]

  /// Glorot-uniform weights (fan = channels * 9), zero bias.
  static Conv2D glorot(std::size_t in_channels, std::size_t out_channels,
                       Prng& prng);

  std::size_t in_channels() const { return weights.dim(1); }
  std::size_t out_channels() const { return weights.dim(0); }
};

template <typename T>
struct ConvGradients {
  Tensor<T> input;  // empty when not requested
  Tensor<T> weights;
  Tensor<T> bias;
};

/// [B,C,H,W] -> [B,out_ch,H,W].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Conv2D<T>& layer);

/// Gradients of sum(grad_out * conv2d_forward(input, layer)).
/// The input gradient is skipped when `need_input_grad` is false (first layer).
template <typename T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input, const Conv2D<T>& layer,
                                 const Tensor<T>& grad_out,
                                 bool need_input_grad = true);

/// Winner positions of a 2x2 max pool: one flat input index per output.
struct PoolSwitches {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::size_t> argmax;
};

template <typename T>
struct PoolResult {
  Tensor<T> output;
  PoolSwitches switches;
};

/// Disjoint 2x2 windows. H and W must be even. Ties go to the first
/// element in row-major window order.
template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2x2_backward(const PoolSwitches& switches,
                              const Tensor<T>& grad_out);

template <typename T>
struct Dense {
  Tensor<T> weights;  // [in_features, out_features]
  Tensor<T> bias;     // [out_features]

  static Dense glorot(std::size_t in_features, std::size_t out_features,
                      Prng& prng);

  std::size_t in_features() const { return weights.dim(0); }
  std::size_t out_features() const { return weights.dim(1); }
};

template <typename T>
struct DenseGradients {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// [B,F] x [F,out] + bias.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Dense<T>& layer);

template <typename T>
DenseGradients<T> dense_backward(const Tensor<T>& input, const Dense<T>& layer,
                                 const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);

/// `activation` may be either the ReLU input or its output: the gradient
/// passes where it is strictly positive (zero at exactly 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& activation, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input);

/// Uses the forward output y: grad * y * (1 - y).
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out);

/// Inverted dropout. In train mode each element survives with probability
/// 1 - rate and is scaled by 1 / (1 - rate); eval mode is the identity.
struct DropoutLayer {
  double rate = 0.5;
};

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;  // per-element multiplier: 0 or 1 / (1 - rate)
};

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, const DropoutLayer& layer,
                                 Mode mode, Prng& prng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_out);

}  // namespace cxrnet
