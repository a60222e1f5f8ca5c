#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tdvs/image.hpp"
#include "tdvs/rng.hpp"

namespace tdvs {

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
};

struct AugmentationConfig {
  std::array<double, 2> lighting_gain_range{1.0, 1.0};
  std::array<double, 2> lighting_gradient_range{0.0, 0.0};  // per image width
  std::array<int, 2> occlusion_count_range{0, 0};
  std::array<double, 2> occlusion_area_fraction_range{0.0, 0.0};  // per rectangle
  std::uint64_t seed = 0;

  bool valid() const;
  bool is_identity() const;
};

/// One concrete draw from an AugmentationConfig.
struct AugmentationSample {
  double gain = 1.0;
  double gradient = 0.0;
  std::vector<PixelRect> rects;

  /// Fraction of a w x h image covered by the union of the rectangles.
  double covered_fraction(int w, int h) const;
};

/// out(x, y) = clamp(in(x, y) * (gain + gradient * (x / width - 0.5)), 0, 1).
ImageBuffer apply_lighting(const ImageBuffer& img, double gain, double gradient);

/// Pixels inside any rectangle become black; rectangles are clipped to the
/// image bounds.
ImageBuffer apply_occlusion(const ImageBuffer& img, std::span<const PixelRect> rects);

/// Draw gain, gradient and occlusion rectangles for an image of the given
/// size. Deterministic for a given rng state.
AugmentationSample sample_augmentation(const AugmentationConfig& cfg, Rng& rng,
                                       int image_w, int image_h);

/// Lighting followed by occlusion (black patches stay black).
ImageBuffer apply_augmentation(const ImageBuffer& img, const AugmentationSample& sample);

}  // namespace tdvs
