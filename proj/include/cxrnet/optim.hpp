#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cxrnet/tensor.hpp"

namespace cxrnet {

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d predictions, same shape as predictions
};

/// Mean binary cross-entropy over the batch. Targets must be exactly 0 or 1.
///
/// The gradient is (p~ - y) / (p~ (1 - p~) B) with p~ the clamped
/// probability, i.e. the exact derivative inside the clamp band, kept
/// non-zero at the clamp edges so saturated wrong predictions still learn.
template <typename T>
LossResult<T> bce_loss(const Tensor<T>& predictions, const Tensor<T>& targets);

/// Adam moments and hyperparameters. m and v mirror the parameter shapes.
template <typename T>
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;

  /// Zero moments shaped like `params`.
  static AdamState for_parameters(std::span<const Tensor<T>* const> params,
                                  double learning_rate = 1e-3);
};

/// One bias-corrected Adam update; increments state.step by exactly one.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params,
               std::span<const Tensor<T>> grads, AdamState<T>& state);

struct PlateauConfig {
  int patience = 3;
  double factor = 0.1;
  double min_lr = 1e-5;
};

/// Reduce-on-plateau schedule monitoring a loss (lower is better).
///
/// An epoch improves when its loss is strictly below the best seen so far.
/// After `patience` consecutive non-improving epochs the rate is multiplied
/// by `factor`, floored at `min_lr`, and the counter restarts. A NaN loss
/// counts as non-improving.
class PlateauScheduler {
 public:
  struct Update {
    double learning_rate;
    bool improved;
    bool reduced;
    bool nan_loss;
  };

  PlateauScheduler(PlateauConfig config, double initial_lr);

  Update update(double epoch_loss);

  double learning_rate() const noexcept { return lr_; }
  double best() const noexcept { return best_; }
  int epochs_since_improvement() const noexcept { return wait_; }
  const PlateauConfig& config() const noexcept { return config_; }

 private:
  PlateauConfig config_;
  double lr_;
  double best_;
  int wait_ = 0;
};

}  // namespace cxrnet
