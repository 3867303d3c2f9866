#pragma once

// Finite-difference checks of every layer and of a shrunk composed model,
// all at double precision. Each function builds one random instance from
// `seed` and returns the worst agreement over all gradient components.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cxrnet/layers.hpp"
#include "cxrnet/model.hpp"
#include "cxrnet/optim.hpp"
#include "support/oracles.hpp"

namespace cxrnet::testing {

inline Tensor<double> random_tensor(const Shape& shape, Prng& prng, double lo = -1.0,
                                    double hi = 1.0) {
  Tensor<double> t(shape);
  for (double& v : t.data()) v = prng.uniform(lo, hi);
  return t;
}

inline double weighted_sum(const Tensor<double>& r, const Tensor<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * y[i];
  return s;
}

inline void merge(GradCheck& into, const GradCheck& other) {
  into.ok = into.ok && other.ok;
  into.worst_relative = std::max(into.worst_relative, other.worst_relative);
}

inline GradCheck gradcheck_conv(std::uint64_t seed) {
  Prng prng(seed);
  const std::size_t B = 1 + prng.below(2), C = 1 + prng.below(3),
                    O = 1 + prng.below(3), H = 3 + prng.below(4), W = 3 + prng.below(4);
  Tensor<double> x = random_tensor({B, C, H, W}, prng);
  Conv2D<double> layer{random_tensor({O, C, 3, 3}, prng), random_tensor({O}, prng)};
  const Tensor<double> r = random_tensor({B, O, H, W}, prng);
  auto loss = [&] { return weighted_sum(r, conv2d_forward(x, layer)); };

  const ConvGradients<double> g = conv2d_backward(x, layer, r);
  GradCheck result;
  merge(result, compare_gradients(g.input, numeric_gradient(loss, x)));
  merge(result, compare_gradients(g.weights, numeric_gradient(loss, layer.weights)));
  merge(result, compare_gradients(g.bias, numeric_gradient(loss, layer.bias)));
  return result;
}

inline GradCheck gradcheck_pool(std::uint64_t seed) {
  Prng prng(seed);
  const std::size_t B = 1 + prng.below(2), C = 1 + prng.below(2),
                    H = 2 * (1 + prng.below(3)), W = 2 * (1 + prng.below(3));
  // Distinct values spaced well beyond the difference step, so no window
  // has a near-tie.
  Tensor<double> x({B, C, H, W});
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[prng.below(i)]);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.01 * static_cast<double>(order[i]) + prng.uniform(0.0, 0.001);
  }
  const Tensor<double> r = random_tensor({B, C, H / 2, W / 2}, prng);
  auto loss = [&] { return weighted_sum(r, maxpool2x2_forward(x).output); };
  const Tensor<double> g = maxpool2x2_backward(maxpool2x2_forward(x).switches, r);
  return compare_gradients(g, numeric_gradient(loss, x));
}

inline GradCheck gradcheck_dense(std::uint64_t seed) {
  Prng prng(seed);
  const std::size_t B = 1 + prng.below(3), F = 1 + prng.below(6), O = 1 + prng.below(4);
  Tensor<double> x = random_tensor({B, F}, prng);
  Dense<double> layer{random_tensor({F, O}, prng), random_tensor({O}, prng)};
  const Tensor<double> r = random_tensor({B, O}, prng);
  auto loss = [&] { return weighted_sum(r, dense_forward(x, layer)); };
  const DenseGradients<double> g = dense_backward(x, layer, r);
  GradCheck result;
  merge(result, compare_gradients(g.input, numeric_gradient(loss, x)));
  merge(result, compare_gradients(g.weights, numeric_gradient(loss, layer.weights)));
  merge(result, compare_gradients(g.bias, numeric_gradient(loss, layer.bias)));
  return result;
}

inline GradCheck gradcheck_relu(std::uint64_t seed) {
  Prng prng(seed);
  Tensor<double> x({2, 7});
  for (double& v : x.data()) {
    do v = prng.uniform(-1.0, 1.0);
    while (std::abs(v) < 1e-3);
  }
  const Tensor<double> r = random_tensor(x.shape(), prng);
  auto loss = [&] { return weighted_sum(r, relu_forward(x)); };
  return compare_gradients(relu_backward(x, r), numeric_gradient(loss, x));
}

inline GradCheck gradcheck_sigmoid(std::uint64_t seed) {
  Prng prng(seed);
  Tensor<double> x = random_tensor({3, 5}, prng, -6.0, 6.0);
  const Tensor<double> r = random_tensor(x.shape(), prng);
  auto loss = [&] { return weighted_sum(r, sigmoid_forward(x)); };
  return compare_gradients(sigmoid_backward(sigmoid_forward(x), r),
                           numeric_gradient(loss, x));
}

inline GradCheck gradcheck_dropout(std::uint64_t seed) {
  Prng prng(seed);
  Tensor<double> x = random_tensor({4, 9}, prng);
  const Tensor<double> r = random_tensor(x.shape(), prng);
  const std::uint64_t mask_seed = prng.next_u64();
  // Re-seeding per evaluation freezes the mask across perturbations.
  auto forward = [&] {
    Prng mask_prng(mask_seed);
    return dropout_forward(x, DropoutLayer{0.5}, Mode::train, mask_prng);
  };
  auto loss = [&] { return weighted_sum(r, forward().output); };
  return compare_gradients(dropout_backward(forward().mask, r),
                           numeric_gradient(loss, x));
}

inline GradCheck gradcheck_bce(std::uint64_t seed) {
  Prng prng(seed);
  const std::size_t B = 1 + prng.below(6);
  Tensor<double> p = random_tensor({B, 1}, prng, 0.02, 0.98);
  Tensor<double> y({B, 1});
  for (double& v : y.data()) v = prng.bernoulli(0.5) ? 1.0 : 0.0;
  auto loss = [&] { return bce_loss(p, y).loss; };
  // BCE is smooth and well scaled; the tighter bound applies here.
  return compare_gradients(bce_loss(p, y).grad, numeric_gradient(loss, p), 1e-6, 1e-10);
}

/// 16x16 input, 2 and 3 filters, 4 hidden units, dropout off, batch of two.
inline ModelSpec shrunk_spec() {
  ModelSpec spec;
  spec.image_size = 16;
  spec.conv_filters = {2, 3};
  spec.dense_units = 4;
  spec.dropout_rate = 0.0;
  return spec;
}

inline GradCheck gradcheck_model(std::uint64_t seed) {
  Prng prng(seed);
  Network<double> net(shrunk_spec(), prng);
  for (Tensor<double>* p : net.parameters()) {
    for (double& v : p->data()) v += prng.uniform(-0.1, 0.1);
  }
  const Tensor<double> x = random_tensor({2, 1, 16, 16}, prng, 0.0, 1.0);
  const Tensor<double> y({2, 1}, {0.0, 1.0});
  auto loss = [&] {
    return bce_loss(net.forward(x, Mode::train).probabilities, y).loss;
  };
  const ForwardPass<double> pass = net.forward(x, Mode::train);
  const std::vector<Tensor<double>> grads =
      net.backward(pass, bce_loss(pass.probabilities, y).grad);
  GradCheck result;
  const std::vector<Tensor<double>*> params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    merge(result, compare_gradients(grads[i], numeric_gradient(loss, *params[i])));
  }
  return result;
}

}  // namespace cxrnet::testing
