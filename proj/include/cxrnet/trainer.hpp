#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cxrnet/augment.hpp"
#include "cxrnet/datapipe.hpp"
#include "cxrnet/model.hpp"
#include "cxrnet/optim.hpp"

namespace cxrnet {

/// Training hyperparameters. Defaults:
/// Adam at 1e-3, batch 32, reduce-on-plateau (patience 3, factor 0.1,
/// floor 1e-5) on validation loss, augmentation on the training split.
struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double initial_lr = 1e-3;
  std::uint64_t seed = 0;
  bool augment_enabled = true;
  AugmentConfig augment;
  PlateauConfig plateau;

  /// Throws ConfigError on non-positive batch size or rate, or an invalid
  /// augmentation / plateau setting. Zero epochs is allowed.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // on augmented batches as seen, threshold 0.5
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;  // rate used during this epoch
};

struct History {
  std::vector<EpochRecord> epochs;

  /// `epoch,train_loss,train_acc,val_loss,val_acc,lr` with a header row.
  std::string to_csv() const;
};

struct TrainHooks {
  /// Called after each epoch (after the schedule update). Returning false
  /// stops training early.
  std::function<bool(const EpochRecord&, const Network<float>&,
                     const AdamState<float>&)>
      on_epoch_end;
};

struct TrainResult {
  History history;
  AdamState<float> optimizer;
};

/// Loaders for a training run: shuffled, optionally augmented train split;
/// unshuffled, never augmented validation split.
struct TrainLoaders {
  BatchLoader train;
  BatchLoader val;
};

TrainLoaders make_loaders(const LabeledDataset& train, const LabeledDataset& val,
                          const TrainConfig& config, std::size_t image_size);

/// Runs `config.epochs` epochs: a shuffled pass with dropout active and one
/// Adam step per batch, then a validation pass in eval mode, then the
/// plateau update with that epoch's validation loss.
///
/// Throws NumericError naming the epoch and batch if the loss becomes
/// non-finite; ConfigError if the validation loader augments.
TrainResult train(Network<float>& model, const BatchLoader& train_loader,
                  const BatchLoader& val_loader, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Continues from an existing optimizer state (e.g. a checkpoint).
TrainResult train(Network<float>& model, const BatchLoader& train_loader,
                  const BatchLoader& val_loader, const TrainConfig& config,
                  AdamState<float> optimizer, const TrainHooks& hooks = {});

struct Scores {
  std::vector<double> probabilities;
  std::vector<int> labels;
};

/// Eval-mode probabilities in dataset order. The loader must neither
/// shuffle nor augment.
Scores evaluate(const Network<float>& model, const BatchLoader& loader);

/// Mean loss and accuracy (threshold 0.5) of an eval-mode pass.
struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};
LossAccuracy measure(const Network<float>& model, const BatchLoader& loader);

}  // namespace cxrnet
