#include "cxrnet/trainer.hpp"

#include <fmt/format.h>

#include <cmath>

namespace cxrnet {
namespace {

constexpr std::uint64_t kDropoutStream = 0x64726f70;  // "drop"

std::size_t correct_predictions(const Tensor<float>& probabilities,
                                const Tensor<float>& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const float predicted = probabilities[i] >= 0.5f ? 1.0f : 0.0f;
    if (predicted == labels[i]) ++correct;
  }
  return correct;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) {
    throw ConfigError("initial learning rate must be positive");
  }
  augment.validate();
  PlateauScheduler(plateau, initial_lr);
}

std::string History::to_csv() const {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
  for (const EpochRecord& r : epochs) {
    out += fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.epoch,
                       r.train_loss, r.train_accuracy, r.val_loss,
                       r.val_accuracy, r.learning_rate);
  }
  return out;
}

TrainLoaders make_loaders(const LabeledDataset& train, const LabeledDataset& val,
                          const TrainConfig& config, std::size_t image_size) {
  config.validate();
  LoaderOptions train_opts;
  train_opts.batch_size = config.batch_size;
  train_opts.image_size = image_size;
  train_opts.shuffle = true;
  train_opts.seed = config.seed;
  if (config.augment_enabled) train_opts.augment = config.augment;

  LoaderOptions val_opts;
  val_opts.batch_size = config.batch_size;
  val_opts.image_size = image_size;
  return {BatchLoader(train, train_opts), BatchLoader(val, val_opts)};
}

LossAccuracy measure(const Network<float>& model, const BatchLoader& loader) {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < loader.batch_count(); ++b) {
    const Batch batch = loader.batch(0, b);
    const Tensor<float> p = model.predict(batch.images);
    loss_sum += bce_loss(p, batch.labels).loss * static_cast<double>(p.dim(0));
    correct += correct_predictions(p, batch.labels);
  }
  const double n = static_cast<double>(loader.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainResult train(Network<float>& model, const BatchLoader& train_loader,
                  const BatchLoader& val_loader, const TrainConfig& config,
                  const TrainHooks& hooks) {
  std::vector<const Tensor<float>*> params;
  for (const Tensor<float>* p : std::as_const(model).parameters()) params.push_back(p);
  return train(model, train_loader, val_loader, config,
               AdamState<float>::for_parameters(params, config.initial_lr), hooks);
}

TrainResult train(Network<float>& model, const BatchLoader& train_loader,
                  const BatchLoader& val_loader, const TrainConfig& config,
                  AdamState<float> optimizer, const TrainHooks& hooks) {
  config.validate();
  if (val_loader.augments()) {
    throw ConfigError("validation loader must not augment");
  }
  if (train_loader.options().image_size != model.spec().image_size ||
      val_loader.options().image_size != model.spec().image_size) {
    throw ShapeError("loader image size does not match the model input");
  }

  TrainResult result{{}, std::move(optimizer)};
  PlateauScheduler schedule(config.plateau, result.optimizer.learning_rate);
  const std::vector<Tensor<float>*> params = model.parameters();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch + 1;
    record.learning_rate = schedule.learning_rate();
    result.optimizer.learning_rate = schedule.learning_rate();

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < train_loader.batch_count(); ++b) {
      const Batch batch = train_loader.batch(epoch, b);
      Prng dropout = Prng::derive(config.seed, {kDropoutStream, epoch, b});
      const ForwardPass<float> pass = model.forward(batch.images, Mode::train, &dropout);
      if (!all_finite(pass.probabilities)) {
        throw NumericError(fmt::format("non-finite model output at epoch {} batch {}",
                                       epoch + 1, b));
      }
      const LossResult<float> loss = bce_loss(pass.probabilities, batch.labels);
      if (!std::isfinite(loss.loss)) {
        throw NumericError(fmt::format("non-finite training loss at epoch {} batch {}",
                                       epoch + 1, b));
      }
      std::vector<Tensor<float>> grads = model.backward(pass, loss.grad);
      for (const auto& g : grads) {
        if (!all_finite(g)) {
          throw NumericError(fmt::format(
              "non-finite gradient at epoch {} batch {}", epoch + 1, b));
        }
      }
      adam_step<float>(params, grads, result.optimizer);

      loss_sum += loss.loss * static_cast<double>(batch.labels.dim(0));
      correct += correct_predictions(pass.probabilities, batch.labels);
    }
    const double n = static_cast<double>(train_loader.size());
    record.train_loss = loss_sum / n;
    record.train_accuracy = static_cast<double>(correct) / n;

    LossAccuracy val;
    try {
      val = measure(model, val_loader);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("validation at epoch {}: {}", epoch + 1, e.what()));
    }
    if (!std::isfinite(val.loss)) {
      throw NumericError(fmt::format("non-finite validation loss at epoch {}", epoch + 1));
    }
    record.val_loss = val.loss;
    record.val_accuracy = val.accuracy;
    schedule.update(val.loss);
    result.optimizer.learning_rate = schedule.learning_rate();

    result.history.epochs.push_back(record);
    if (hooks.on_epoch_end &&
        !hooks.on_epoch_end(record, model, result.optimizer)) {
      break;
    }
  }
  return result;
}

Scores evaluate(const Network<float>& model, const BatchLoader& loader) {
  if (loader.augments() || loader.options().shuffle) {
    throw ConfigError("evaluation loader must neither shuffle nor augment");
  }
  if (loader.options().image_size != model.spec().image_size) {
    throw ShapeError("loader image size does not match the model input");
  }
  Scores scores;
  scores.probabilities.reserve(loader.size());
  scores.labels.reserve(loader.size());
  for (std::size_t b = 0; b < loader.batch_count(); ++b) {
    const Batch batch = loader.batch(0, b);
    const Tensor<float> p = model.predict(batch.images);
    for (std::size_t i = 0; i < p.size(); ++i) {
      scores.probabilities.push_back(p[i]);
      scores.labels.push_back(static_cast<int>(batch.labels[i]));
    }
  }
  return scores;
}

}  // namespace cxrnet
