#include "cxrnet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cxrnet {

template <typename T>
LossResult<T> bce_loss(const Tensor<T>& predictions, const Tensor<T>& targets) {
  if (predictions.shape() != targets.shape()) {
    throw ShapeError("bce_loss: predictions " + to_string(predictions.shape()) +
                     " vs targets " + to_string(targets.shape()));
  }
  if (predictions.empty()) throw InputError("bce_loss: empty batch");
  require_finite(predictions, "bce_loss predictions");

  const std::size_t batch = predictions.dim(0);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  LossResult<T> result{0.0, Tensor<T>(predictions.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double y = static_cast<double>(targets[i]);
    if (y != 0.0 && y != 1.0) {
      throw InputError("bce_loss: target " + std::to_string(y) +
                       " is not 0 or 1");
    }
    const double p = std::clamp(static_cast<double>(predictions[i]),
                                kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    result.grad[i] = static_cast<T>((p - y) / (p * (1.0 - p)) * inv_batch);
  }
  result.loss = -total * inv_batch;
  return result;
}

template <typename T>
AdamState<T> AdamState<T>::for_parameters(
    std::span<const Tensor<T>* const> params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const Tensor<T>* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

template <typename T>
void adam_step(std::span<Tensor<T>* const> params,
               std::span<const Tensor<T>> grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->shape() != grads[k].shape() ||
        params[k]->shape() != state.m[k].shape() ||
        params[k]->shape() != state.v[k].shape()) {
      throw ShapeError("adam_step: shape mismatch for parameter " +
                       std::to_string(k));
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - state.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - state.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T lr = static_cast<T>(state.learning_rate);
  const T eps = static_cast<T>(state.epsilon);

  for (std::size_t k = 0; k < params.size(); ++k) {
    T* theta = params[k]->raw();
    const T* g = grads[k].raw();
    T* m = state.m[k].raw();
    T* v = state.v[k].raw();
    const std::size_t n = params[k]->size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + one_minus_b1 * g[i];
      v[i] = b2 * v[i] + one_minus_b2 * g[i] * g[i];
      const T m_hat = m[i] / correction1;
      const T v_hat = v[i] / correction2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(PlateauConfig config, double initial_lr)
    : config_(config),
      lr_(initial_lr),
      best_(std::numeric_limits<double>::infinity()) {
  if (config_.patience < 1 || !(config_.factor > 0.0 && config_.factor < 1.0) ||
      !(config_.min_lr > 0.0) || !(initial_lr > 0.0)) {
    throw ConfigError(
        "plateau schedule needs patience >= 1, factor in (0,1), positive "
        "min_lr and initial rate");
  }
}

PlateauScheduler::Update PlateauScheduler::update(double epoch_loss) {
  Update u{lr_, false, false, std::isnan(epoch_loss)};
  if (!u.nan_loss && epoch_loss < best_) {
    best_ = epoch_loss;
    wait_ = 0;
    u.improved = true;
    return u;
  }
  if (++wait_ >= config_.patience) {
    const double reduced = std::max(lr_ * config_.factor, config_.min_lr);
    u.reduced = reduced < lr_;
    lr_ = std::min(lr_, reduced);
    wait_ = 0;
  }
  u.learning_rate = lr_;
  return u;
}

template LossResult<float> bce_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> bce_loss(const Tensor<double>&, const Tensor<double>&);
template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::span<Tensor<float>* const>,
                        std::span<const Tensor<float>>, AdamState<float>&);
template void adam_step(std::span<Tensor<double>* const>,
                        std::span<const Tensor<double>>, AdamState<double>&);

}  // namespace cxrnet
