#include "cxrnet/layers.hpp"

#include <cmath>
#include <string>

#include "cxrnet/linalg.hpp"

namespace cxrnet {
namespace {

using detail::ConstMatrixView;
using detail::MatrixView;
using detail::RowMatrix;

constexpr std::size_t kTaps = kKernelSize * kKernelSize;

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + " expects rank " +
                     std::to_string(rank) + ", got " + to_string(shape));
  }
}

// col[(c*9 + ky*3 + kx), y*W + x] = image[c, y+ky-1, x+kx-1], zero outside.
template <typename T, typename U>
void im2col(const T* image, std::size_t channels, std::size_t height,
            std::size_t width, U* col) {
  const std::size_t plane = height * width;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = image + c * plane;
    for (std::size_t ky = 0; ky < kKernelSize; ++ky) {
      for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
        U* dst = col + (c * kTaps + ky * kKernelSize + kx) * plane;
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(ky) - 1;
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(kx) - 1;
        for (std::size_t y = 0; y < height; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + oy;
          U* row = dst + y * width;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(height)) {
            std::fill(row, row + width, U{0});
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * width;
          for (std::size_t x = 0; x < width; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + ox;
            row[x] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(width))
                         ? U{0}
                         : static_cast<U>(srow[sx]);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the image.
template <typename T>
void col2im(const T* col, std::size_t channels, std::size_t height,
            std::size_t width, T* image) {
  const std::size_t plane = height * width;
  for (std::size_t c = 0; c < channels; ++c) {
    T* dst = image + c * plane;
    for (std::size_t ky = 0; ky < kKernelSize; ++ky) {
      for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
        const T* src = col + (c * kTaps + ky * kKernelSize + kx) * plane;
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(ky) - 1;
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(kx) - 1;
        for (std::size_t y = 0; y < height; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + oy;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(height)) continue;
          T* drow = dst + static_cast<std::size_t>(sy) * width;
          const T* row = src + y * width;
          for (std::size_t x = 0; x < width; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + ox;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(width)) continue;
            drow[sx] += row[x];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_input(const Tensor<T>& input, const Conv2D<T>& layer) {
  require_rank(input.shape(), 4, "conv2d");
  if (input.dim(1) != layer.in_channels()) {
    throw ShapeError("conv2d channel mismatch: input has " +
                     std::to_string(input.dim(1)) + ", layer expects " +
                     std::to_string(layer.in_channels()));
  }
}

}  // namespace

template <typename T>
Conv2D<T> Conv2D<T>::glorot(std::size_t in_channels, std::size_t out_channels,
                            Prng& prng) {
  Conv2D layer;
  layer.weights = glorot_uniform<T>(
      {out_channels, in_channels, kKernelSize, kKernelSize},
      in_channels * kTaps, out_channels * kTaps, prng);
  layer.bias = zeros<T>({out_channels});
  return layer;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Conv2D<T>& layer) {
  check_conv_input(input, layer);
  const std::size_t batch = input.dim(0), channels = input.dim(1);
  const std::size_t height = input.dim(2), width = input.dim(3);
  const std::size_t out_ch = layer.out_channels();
  const std::size_t plane = height * width;
  const auto rows = static_cast<Eigen::Index>(channels * kTaps);
  const auto cols = static_cast<Eigen::Index>(plane);

  // Accumulated in double and rounded once, so single-precision outputs stay
  // within half an ulp of the exact sum.
  Tensor<T> output({batch, out_ch, height, width});
  AlignedVector<double> col(channels * kTaps * plane);
  const RowMatrix<double> w =
      ConstMatrixView<T>(layer.weights.raw(), static_cast<Eigen::Index>(out_ch), rows)
          .template cast<double>();
  const Eigen::VectorXd bias =
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(
          layer.bias.raw(), static_cast<Eigen::Index>(out_ch))
          .template cast<double>();
  RowMatrix<double> acc(static_cast<Eigen::Index>(out_ch), cols);

  for (std::size_t b = 0; b < batch; ++b) {
    im2col(input.raw() + b * channels * plane, channels, height, width,
           col.data());
    acc.noalias() = w * ConstMatrixView<double>(col.data(), rows, cols);
    acc.colwise() += bias;
    MatrixView<T>(output.raw() + b * out_ch * plane, static_cast<Eigen::Index>(out_ch),
                  cols) = acc.template cast<T>();
  }
  return output;
}

template <typename T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input, const Conv2D<T>& layer,
                                 const Tensor<T>& grad_out,
                                 bool need_input_grad) {
  check_conv_input(input, layer);
  const std::size_t batch = input.dim(0), channels = input.dim(1);
  const std::size_t height = input.dim(2), width = input.dim(3);
  const std::size_t out_ch = layer.out_channels();
  const Shape expected{batch, out_ch, height, width};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv2d_backward: grad_out " + to_string(grad_out.shape()) +
                     " does not match forward output " + to_string(expected));
  }
  const std::size_t plane = height * width;
  const auto rows = static_cast<Eigen::Index>(channels * kTaps);
  const auto cols = static_cast<Eigen::Index>(plane);
  const auto oc = static_cast<Eigen::Index>(out_ch);

  ConvGradients<T> grads;
  grads.weights = zeros<T>(layer.weights.shape());
  grads.bias = zeros<T>(layer.bias.shape());
  if (need_input_grad) grads.input = zeros<T>(input.shape());

  AlignedVector<T> col(channels * kTaps * plane);
  AlignedVector<T> grad_col(need_input_grad ? col.size() : 0);
  ConstMatrixView<T> w(layer.weights.raw(), oc, rows);
  MatrixView<T> gw(grads.weights.raw(), oc, rows);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grads.bias.raw(), oc);

  for (std::size_t b = 0; b < batch; ++b) {
    ConstMatrixView<T> gout(grad_out.raw() + b * out_ch * plane, oc, cols);
    im2col(input.raw() + b * channels * plane, channels, height, width,
           col.data());
    gw.noalias() += gout * ConstMatrixView<T>(col.data(), rows, cols).transpose();
    gb += gout.rowwise().sum();
    if (need_input_grad) {
      MatrixView<T>(grad_col.data(), rows, cols).noalias() = w.transpose() * gout;
      col2im(grad_col.data(), channels, height, width,
             grads.input.raw() + b * channels * plane);
    }
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input) {
  require_rank(input.shape(), 4, "maxpool2x2");
  const std::size_t batch = input.dim(0), channels = input.dim(1);
  const std::size_t height = input.dim(2), width = input.dim(3);
  if (height % 2 != 0 || width % 2 != 0) {
    throw ShapeError("maxpool2x2 needs even spatial extents, got " +
                     to_string(input.shape()));
  }
  const std::size_t oh = height / 2, ow = width / 2;
  PoolResult<T> result;
  result.output = Tensor<T>({batch, channels, oh, ow});
  result.switches.input_shape = input.shape();
  result.switches.output_shape = result.output.shape();
  result.switches.argmax.resize(result.output.size());

  const T* in = input.raw();
  T* out = result.output.raw();
  std::size_t* arg = result.switches.argmax.data();
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const std::size_t base = plane * height * width;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        const std::size_t top = base + 2 * y * width + 2 * x;
        const std::size_t candidates[4] = {top, top + 1, top + width,
                                           top + width + 1};
        std::size_t best = candidates[0];
        for (std::size_t k = 1; k < 4; ++k) {
          if (in[candidates[k]] > in[best]) best = candidates[k];
        }
        out[o] = in[best];
        arg[o] = best;
      }
    }
  }
  return result;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const PoolSwitches& switches,
                              const Tensor<T>& grad_out) {
  if (grad_out.shape() != switches.output_shape) {
    throw ShapeError("maxpool2x2_backward: grad_out " +
                     to_string(grad_out.shape()) + " does not match pooled " +
                     to_string(switches.output_shape));
  }
  Tensor<T> grad_in(switches.input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    grad_in[switches.argmax[o]] += grad_out[o];
  }
  return grad_in;
}

template <typename T>
Dense<T> Dense<T>::glorot(std::size_t in_features, std::size_t out_features,
                          Prng& prng) {
  Dense layer;
  layer.weights = glorot_uniform<T>({in_features, out_features}, in_features,
                                    out_features, prng);
  layer.bias = zeros<T>({out_features});
  return layer;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Dense<T>& layer) {
  require_rank(input.shape(), 2, "dense");
  if (input.dim(1) != layer.in_features()) {
    throw ShapeError("dense expects " + std::to_string(layer.in_features()) +
                     " features, got " + to_string(input.shape()));
  }
  Tensor<T> out = matmul(input, layer.weights);
  MatrixView<T> view(out.raw(), static_cast<Eigen::Index>(out.dim(0)),
                     static_cast<Eigen::Index>(out.dim(1)));
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(
      layer.bias.raw(), static_cast<Eigen::Index>(layer.out_features()));
  view.rowwise() += bias;
  return out;
}

template <typename T>
DenseGradients<T> dense_backward(const Tensor<T>& input, const Dense<T>& layer,
                                 const Tensor<T>& grad_out) {
  require_rank(input.shape(), 2, "dense_backward");
  const Shape expected{input.dim(0), layer.out_features()};
  if (input.dim(1) != layer.in_features() || grad_out.shape() != expected) {
    throw ShapeError("dense_backward: input " + to_string(input.shape()) +
                     ", grad_out " + to_string(grad_out.shape()) +
                     " inconsistent with layer");
  }
  const auto batch = static_cast<Eigen::Index>(input.dim(0));
  const auto fin = static_cast<Eigen::Index>(layer.in_features());
  const auto fout = static_cast<Eigen::Index>(layer.out_features());
  ConstMatrixView<T> x(input.raw(), batch, fin);
  ConstMatrixView<T> g(grad_out.raw(), batch, fout);
  ConstMatrixView<T> w(layer.weights.raw(), fin, fout);

  DenseGradients<T> grads;
  grads.weights = Tensor<T>(layer.weights.shape());
  grads.bias = Tensor<T>(layer.bias.shape());
  grads.input = Tensor<T>(input.shape());
  MatrixView<T>(grads.weights.raw(), fin, fout).noalias() = x.transpose() * g;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grads.bias.raw(), fout) =
      g.colwise().sum();
  MatrixView<T>(grads.input.raw(), batch, fin).noalias() = g * w.transpose();
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& activation, const Tensor<T>& grad_out) {
  if (activation.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward shape mismatch");
  }
  Tensor<T> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activation[i] > T{0})) grad[i] = T{0};
  }
  return grad;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.data()) {
    // Branch keeps exp() from overflowing for large |v|.
    if (v >= T{0}) {
      v = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      v = e / (T{1} + e);
    }
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
  if (output.shape() != grad_out.shape()) {
    throw ShapeError("sigmoid_backward shape mismatch");
  }
  Tensor<T> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] *= output[i] * (T{1} - output[i]);
  }
  return grad;
}

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, const DropoutLayer& layer,
                                 Mode mode, Prng& prng) {
  if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
    throw InputError("dropout rate must lie in [0, 1), got " +
                     std::to_string(layer.rate));
  }
  DropoutResult<T> result{input, full<T>(input.shape(), T{1})};
  if (mode == Mode::eval || layer.rate == 0.0) return result;

  const T scale = static_cast<T>(1.0 / (1.0 - layer.rate));
  for (std::size_t i = 0; i < input.size(); ++i) {
    const bool keep = !prng.bernoulli(layer.rate);
    result.mask[i] = keep ? scale : T{0};
    result.output[i] = input[i] * result.mask[i];
  }
  return result;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_out) {
  if (mask.shape() != grad_out.shape()) {
    throw ShapeError("dropout_backward shape mismatch");
  }
  Tensor<T> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
  return grad;
}

#define CXRNET_INSTANTIATE_LAYERS(T)                                           \
  template struct Conv2D<T>;                                                   \
  template struct Dense<T>;                                                    \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Conv2D<T>&);       \
  template ConvGradients<T> conv2d_backward(const Tensor<T>&, const Conv2D<T>&, \
                                            const Tensor<T>&, bool);           \
  template PoolResult<T> maxpool2x2_forward(const Tensor<T>&);                 \
  template Tensor<T> maxpool2x2_backward(const PoolSwitches&, const Tensor<T>&); \
  template Tensor<T> dense_forward(const Tensor<T>&, const Dense<T>&);         \
  template DenseGradients<T> dense_backward(const Tensor<T>&, const Dense<T>&,  \
                                            const Tensor<T>&);                 \
  template Tensor<T> relu_forward(const Tensor<T>&);                           \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> sigmoid_forward(const Tensor<T>&);                        \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);     \
  template DropoutResult<T> dropout_forward(const Tensor<T>&,                  \
                                            const DropoutLayer&, Mode, Prng&); \
  template Tensor<T> dropout_backward(const Tensor<T>&, const Tensor<T>&);

CXRNET_INSTANTIATE_LAYERS(float)
CXRNET_INSTANTIATE_LAYERS(double)

#undef CXRNET_INSTANTIATE_LAYERS

}  // namespace cxrnet
