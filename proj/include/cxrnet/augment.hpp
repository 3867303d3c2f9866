#pragma once

#include "cxrnet/image.hpp"
#include "cxrnet/prng.hpp"

namespace cxrnet {

/// Ranges of the random training-time transform. Pixels exposed by the
/// transform are filled from the nearest edge.
struct AugmentConfig {
  double rotation_max_deg = 30.0;    // angle ~ U(-max, +max)
  double zoom_max_frac = 0.20;       // scale ~ U(1 - z, 1 + z); > 1 magnifies
  double horizontal_flip_prob = 0.5;
  double shift_max_frac = 0.10;      // shift ~ U(-f, +f) * extent, both axes

  /// Throws ConfigError unless fractions lie in [0,1) (flip probability in
  /// [0,1]) and the rotation bound in [0,180].
  void validate() const;

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

/// One concrete draw of the transform.
struct AffineParams {
  double rotation_deg = 0.0;
  double zoom = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;  // pixels
  bool flip = false;

  static AffineParams identity() { return {}; }
};

/// Draws rotation, zoom, shift x, shift y and flip, in that order.
AffineParams sample_affine(const AugmentConfig& config, Prng& prng,
                           std::size_t height, std::size_t width);

/// Applies the transform as a single inverse-mapped bilinear resampling
/// about the image centre. Output has the input shape and is clamped to
/// [0, 1]; the identity transform reproduces the input exactly.
Image apply_affine(const Image& image, const AffineParams& params);

/// Mirror around the vertical axis.
Image flip_horizontal(const Image& image);

/// sample_affine followed by apply_affine.
Image augment(const Image& image, const AugmentConfig& config, Prng& prng);

}  // namespace cxrnet
