#pragma once

#include <cstddef>
#include <filesystem>

#include "cxrnet/tensor.hpp"

namespace cxrnet {

/// Single-channel image, shape [H,W].
using Image = Tensor<float>;

/// Decodes an 8-bit (or 16-bit PNG, reduced to 8) grayscale or colour PNG or
/// JPEG into raw intensities 0..255. The container is detected from the file
/// signature, not the extension. Colour pixels are reduced with the BT.601
/// luma weights 0.299 R + 0.587 G + 0.114 B, rounded to the nearest integer.
/// Alpha is ignored. Throws DecodeError naming the path on failure.
Image load_grayscale(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; values are rounded and clamped to 0..255.
void save_png(const std::filesystem::path& path, const Image& image);

/// BT.601 luma of one 8-bit RGB pixel, rounded.
int luminance(int red, int green, int blue) noexcept;

/// Bilinear resampling with the half-pixel convention: output pixel centre
/// (x + 0.5) maps to input coordinate (x + 0.5) * in / out - 0.5, clamped
/// to the valid range. Same-size resize is the exact identity.
Image resize_bilinear(const Image& image, std::size_t height, std::size_t width);

/// value / 255. Throws InputError if any value is outside [0, 255].
Image normalize(const Image& image);

/// load_grayscale -> resize_bilinear(size, size) -> normalize.
Image preprocess(const std::filesystem::path& path, std::size_t size);

}  // namespace cxrnet
