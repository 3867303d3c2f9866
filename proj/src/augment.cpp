#include "cxrnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cxrnet {

void AugmentConfig::validate() const {
  const auto fraction = [](double f) { return f >= 0.0 && f < 1.0; };
  if (!(rotation_max_deg >= 0.0 && rotation_max_deg <= 180.0) ||
      !fraction(zoom_max_frac) || !fraction(shift_max_frac) ||
      !(horizontal_flip_prob >= 0.0 && horizontal_flip_prob <= 1.0)) {
    throw ConfigError("augmentation ranges out of bounds");
  }
}

AffineParams sample_affine(const AugmentConfig& config, Prng& prng,
                           std::size_t height, std::size_t width) {
  AffineParams p;
  p.rotation_deg = prng.uniform(-config.rotation_max_deg, config.rotation_max_deg);
  p.zoom = prng.uniform(1.0 - config.zoom_max_frac, 1.0 + config.zoom_max_frac);
  p.shift_x = prng.uniform(-config.shift_max_frac, config.shift_max_frac) *
              static_cast<double>(width);
  p.shift_y = prng.uniform(-config.shift_max_frac, config.shift_max_frac) *
              static_cast<double>(height);
  p.flip = prng.bernoulli(config.horizontal_flip_prob);
  return p;
}

Image apply_affine(const Image& image, const AffineParams& params) {
  if (image.rank() != 2) throw ShapeError("apply_affine expects an [H,W] image");
  if (!(params.zoom > 0.0)) throw InputError("zoom must be positive");
  const std::size_t height = image.dim(0), width = image.dim(1);
  const double max_x = static_cast<double>(width - 1);
  const double max_y = static_cast<double>(height - 1);
  const double cx = max_x / 2.0, cy = max_y / 2.0;
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double inv_zoom = 1.0 / params.zoom;

  Image out({height, width});
  const float* src = image.raw();
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double xd = params.flip ? max_x - static_cast<double>(x)
                                    : static_cast<double>(x);
      const double dx = (xd - cx - params.shift_x) * inv_zoom;
      const double dy = (static_cast<double>(y) - cy - params.shift_y) * inv_zoom;
      // Inverse rotation maps the destination back into the source.
      const double sx = std::clamp(cx + cos_t * dx + sin_t * dy, 0.0, max_x);
      const double sy = std::clamp(cy - sin_t * dx + cos_t * dy, 0.0, max_y);

      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t y0 = static_cast<std::size_t>(sy);
      const std::size_t x1 = std::min(x0 + 1, width - 1);
      const std::size_t y1 = std::min(y0 + 1, height - 1);
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      const double v00 = src[y0 * width + x0], v01 = src[y0 * width + x1];
      const double v10 = src[y1 * width + x0], v11 = src[y1 * width + x1];
      const double top = v00 + (v01 - v00) * fx;
      const double bottom = v10 + (v11 - v10) * fx;
      out.at(y, x) = static_cast<float>(
          std::clamp(top + (bottom - top) * fy, 0.0, 1.0));
    }
  }
  return out;
}

Image flip_horizontal(const Image& image) {
  if (image.rank() != 2) throw ShapeError("flip_horizontal expects an [H,W] image");
  Image out = image;
  const std::size_t width = image.dim(1);
  for (std::size_t y = 0; y < image.dim(0); ++y) {
    float* row = out.raw() + y * width;
    std::reverse(row, row + width);
  }
  return out;
}

Image augment(const Image& image, const AugmentConfig& config, Prng& prng) {
  if (image.rank() != 2) throw ShapeError("augment expects an [H,W] image");
  return apply_affine(image,
                      sample_affine(config, prng, image.dim(0), image.dim(1)));
}

}  // namespace cxrnet
