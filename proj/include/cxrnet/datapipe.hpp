#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cxrnet/augment.hpp"
#include "cxrnet/image.hpp"

namespace cxrnet {

enum class Split { train, val, test };

/// Positive class is pneumonia.
enum class Label : int { normal = 0, pneumonia = 1 };

std::string_view to_string(Split split) noexcept;
std::string_view class_directory(Label label) noexcept;  // "NORMAL" / "PNEUMONIA"

struct DatasetItem {
  std::filesystem::path path;
  Label label;
};

struct LabeledDataset {
  Split split = Split::train;
  std::vector<DatasetItem> items;

  std::size_t size() const noexcept { return items.size(); }
  std::size_t count(Label label) const noexcept;
};

struct DatasetSplits {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
};

/// Reads `root/{train,val,test}/{NORMAL,PNEUMONIA}/*.{png,jpg,jpeg}`
/// (extensions case-insensitive). Labels come only from the class directory.
/// Items are sorted lexicographically by path. Throws LayoutError naming the
/// missing split/class directory, or a class directory with no images.
DatasetSplits scan_dataset(const std::filesystem::path& root);

/// Scans one split directory (`root/<split>/{NORMAL,PNEUMONIA}`).
LabeledDataset scan_split(const std::filesystem::path& root, Split split);

struct Batch {
  Tensor<float> images;  // [B,1,S,S], values in [0,1]
  Tensor<float> labels;  // [B,1], values in {0,1}
  std::vector<std::size_t> indices;  // dataset positions of the rows
};

struct LoaderOptions {
  std::size_t batch_size = 32;
  std::size_t image_size = 128;
  bool shuffle = false;
  std::optional<AugmentConfig> augment;  // train split only
  std::uint64_t seed = 0;
};

/// Decodes and preprocesses every image once, then serves minibatches.
///
/// Epoch e visits each item exactly once. With shuffling the order is a
/// Fisher-Yates permutation from the stream (seed, "order", e); each
/// augmented image draws from its own stream (seed, "augment", e, item), so
/// batches do not depend on the order in which they are requested.
/// Augmentation is refused for the val and test splits.
class BatchLoader {
 public:
  BatchLoader(const LabeledDataset& dataset, LoaderOptions options);

  /// Images already preprocessed to [S,S] in [0,1].
  static BatchLoader from_images(Split split, std::vector<Image> images,
                                 std::vector<Label> labels, LoaderOptions options);

  Split split() const noexcept { return split_; }
  const LoaderOptions& options() const noexcept { return options_; }
  std::size_t size() const noexcept { return images_.size(); }
  std::size_t batch_count() const noexcept;
  bool augments() const noexcept { return options_.augment.has_value(); }

  /// Dataset positions in visiting order for `epoch`.
  std::vector<std::size_t> epoch_order(std::size_t epoch) const;

  Batch batch(std::size_t epoch, std::size_t index) const;

  /// Every batch of the epoch, in order.
  std::vector<Batch> batches(std::size_t epoch) const;

  const Image& image(std::size_t i) const { return images_.at(i); }
  Label label(std::size_t i) const { return labels_.at(i); }

 private:
  BatchLoader(Split split, LoaderOptions options);
  void validate() const;

  Split split_;
  LoaderOptions options_;
  std::vector<Image> images_;
  std::vector<Label> labels_;
};

}  // namespace cxrnet
