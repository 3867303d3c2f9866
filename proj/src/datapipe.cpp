#include "cxrnet/datapipe.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace cxrnet {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572;    // "order"
constexpr std::uint64_t kAugmentStream = 0x6175676d;    // "augm"

bool is_image_file(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view class_directory(Label label) noexcept {
  return label == Label::pneumonia ? "PNEUMONIA" : "NORMAL";
}

std::size_t LabeledDataset::count(Label label) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      items.begin(), items.end(),
      [label](const DatasetItem& item) { return item.label == label; }));
}

LabeledDataset scan_split(const fs::path& root, Split split) {
  const fs::path split_dir = root / std::string(to_string(split));
  if (!fs::is_directory(split_dir)) {
    throw LayoutError("missing split directory '" + std::string(to_string(split)) +
                      "' under " + root.string() +
                      " (expected train/, val/, test/ each with NORMAL/ and "
                      "PNEUMONIA/)");
  }
  LabeledDataset dataset;
  dataset.split = split;
  for (Label label : {Label::normal, Label::pneumonia}) {
    const fs::path class_dir = split_dir / std::string(class_directory(label));
    if (!fs::is_directory(class_dir)) {
      throw LayoutError("missing class directory '" +
                        std::string(to_string(split)) + "/" +
                        std::string(class_directory(label)) + "' under " +
                        root.string());
    }
    std::size_t found = 0;
    for (const auto& entry : fs::directory_iterator(class_dir)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) {
        dataset.items.push_back({entry.path(), label});
        ++found;
      }
    }
    if (found == 0) {
      throw LayoutError("class directory '" + std::string(to_string(split)) +
                        "/" + std::string(class_directory(label)) +
                        "' contains no .png/.jpg/.jpeg images");
    }
  }
  std::sort(dataset.items.begin(), dataset.items.end(),
            [](const DatasetItem& a, const DatasetItem& b) { return a.path < b.path; });
  return dataset;
}

DatasetSplits scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw LayoutError("dataset root " + root.string() + " is not a directory");
  }
  return {scan_split(root, Split::train), scan_split(root, Split::val),
          scan_split(root, Split::test)};
}

BatchLoader::BatchLoader(Split split, LoaderOptions options)
    : split_(split), options_(std::move(options)) {}

void BatchLoader::validate() const {
  if (options_.batch_size == 0) throw ConfigError("batch size must be positive");
  if (options_.image_size == 0) throw ConfigError("image size must be positive");
  if (images_.empty()) {
    throw InputError("cannot batch an empty " + std::string(to_string(split_)) +
                     " dataset");
  }
  if (options_.augment) {
    if (split_ != Split::train) {
      throw ConfigError("augmentation is only allowed on the train split, not " +
                        std::string(to_string(split_)));
    }
    options_.augment->validate();
  }
}

BatchLoader::BatchLoader(const LabeledDataset& dataset, LoaderOptions options)
    : BatchLoader(dataset.split, std::move(options)) {
  images_.reserve(dataset.size());
  labels_.reserve(dataset.size());
  for (const DatasetItem& item : dataset.items) {
    images_.push_back(preprocess(item.path, options_.image_size));
    labels_.push_back(item.label);
  }
  validate();
}

BatchLoader BatchLoader::from_images(Split split, std::vector<Image> images,
                                     std::vector<Label> labels,
                                     LoaderOptions options) {
  if (images.size() != labels.size()) {
    throw InputError("image and label counts differ");
  }
  BatchLoader loader(split, std::move(options));
  const std::size_t s = loader.options_.image_size;
  for (const Image& image : images) {
    if (image.shape() != Shape{s, s}) {
      throw ShapeError("expected [" + std::to_string(s) + "," + std::to_string(s) +
                       "] image, got " + to_string(image.shape()));
    }
    for (float v : image.data()) {
      if (!(v >= 0.0f && v <= 1.0f)) throw InputError("pixel outside [0,1]");
    }
  }
  loader.images_ = std::move(images);
  loader.labels_ = std::move(labels);
  loader.validate();
  return loader;
}

std::size_t BatchLoader::batch_count() const noexcept {
  return (images_.size() + options_.batch_size - 1) / options_.batch_size;
}

std::vector<std::size_t> BatchLoader::epoch_order(std::size_t epoch) const {
  std::vector<std::size_t> order(images_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options_.shuffle) {
    Prng prng = Prng::derive(options_.seed, {kOrderStream, epoch});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[prng.below(i)]);
    }
  }
  return order;
}

Batch BatchLoader::batch(std::size_t epoch, std::size_t index) const {
  if (index >= batch_count()) throw InputError("batch index out of range");
  const std::vector<std::size_t> order = epoch_order(epoch);
  const std::size_t begin = index * options_.batch_size;
  const std::size_t end = std::min(begin + options_.batch_size, order.size());
  const std::size_t rows = end - begin;
  const std::size_t s = options_.image_size;

  Batch batch;
  batch.images = Tensor<float>({rows, 1, s, s});
  batch.labels = Tensor<float>({rows, 1});
  batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t item = batch.indices[r];
    float* dst = batch.images.raw() + r * s * s;
    if (options_.augment) {
      Prng prng = Prng::derive(options_.seed, {kAugmentStream, epoch, item});
      const Image augmented = augment(images_[item], *options_.augment, prng);
      std::copy(augmented.raw(), augmented.raw() + s * s, dst);
    } else {
      std::copy(images_[item].raw(), images_[item].raw() + s * s, dst);
    }
    batch.labels[r] = static_cast<float>(static_cast<int>(labels_[item]));
  }
  return batch;
}

std::vector<Batch> BatchLoader::batches(std::size_t epoch) const {
  std::vector<Batch> out;
  out.reserve(batch_count());
  for (std::size_t i = 0; i < batch_count(); ++i) out.push_back(batch(epoch, i));
  return out;
}

}  // namespace cxrnet
