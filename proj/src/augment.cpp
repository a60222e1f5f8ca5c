#include "tdvs/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tdvs {

bool AugmentationConfig::valid() const {
  return lighting_gain_range[0] > 0.0 && lighting_gain_range[0] <= lighting_gain_range[1] &&
         lighting_gradient_range[0] <= lighting_gradient_range[1] &&
         occlusion_count_range[0] >= 0 && occlusion_count_range[0] <= occlusion_count_range[1] &&
         occlusion_area_fraction_range[0] >= 0.0 &&
         occlusion_area_fraction_range[0] <= occlusion_area_fraction_range[1] &&
         occlusion_area_fraction_range[1] <= 1.0;
}

bool AugmentationConfig::is_identity() const {
  return lighting_gain_range == std::array<double, 2>{1.0, 1.0} &&
         lighting_gradient_range == std::array<double, 2>{0.0, 0.0} &&
         occlusion_count_range == std::array<int, 2>{0, 0};
}

double AugmentationSample::covered_fraction(int w, int h) const {
  if (w <= 0 || h <= 0 || rects.empty()) return 0.0;
  // Row sweep over the union; rect counts stay small.
  long long covered = 0;
  for (int y = 0; y < h; ++y) {
    std::vector<std::pair<int, int>> spans;
    for (const auto& r : rects) {
      if (y < r.y || y >= r.y + r.h) continue;
      const int x0 = std::clamp(r.x, 0, w);
      const int x1 = std::clamp(r.x + r.w, 0, w);
      if (x1 > x0) spans.emplace_back(x0, x1);
    }
    std::sort(spans.begin(), spans.end());
    int end = -1;
    for (auto [a, b] : spans) {
      if (a > end) {
        covered += b - a;
        end = b;
      } else if (b > end) {
        covered += b - end;
        end = b;
      }
    }
  }
  return static_cast<double>(covered) / (static_cast<double>(w) * h);
}

ImageBuffer apply_lighting(const ImageBuffer& img, double gain, double gradient) {
  if (!(gain > 0.0)) throw std::invalid_argument("apply_lighting: gain must be positive");
  ImageBuffer out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double factor = gain + gradient * (static_cast<double>(x) / img.width - 0.5);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = std::clamp(static_cast<float>(img.at(x, y, c) * factor), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

ImageBuffer apply_occlusion(const ImageBuffer& img, std::span<const PixelRect> rects) {
  ImageBuffer out = img;
  for (const auto& r : rects) {
    const int x0 = std::clamp(r.x, 0, img.width);
    const int x1 = std::clamp(r.x + r.w, 0, img.width);
    const int y0 = std::clamp(r.y, 0, img.height);
    const int y1 = std::clamp(r.y + r.h, 0, img.height);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0.0f;
  }
  return out;
}

AugmentationSample sample_augmentation(const AugmentationConfig& cfg, Rng& rng,
                                       int image_w, int image_h) {
  if (!cfg.valid()) throw std::invalid_argument("sample_augmentation: invalid augmentation config");
  AugmentationSample s;
  s.gain = rng.uniform(cfg.lighting_gain_range[0], cfg.lighting_gain_range[1]);
  s.gradient = rng.uniform(cfg.lighting_gradient_range[0], cfg.lighting_gradient_range[1]);
  const int count = rng.uniform_int(cfg.occlusion_count_range[0], cfg.occlusion_count_range[1]);
  for (int k = 0; k < count; ++k) {
    const double frac =
        rng.uniform(cfg.occlusion_area_fraction_range[0], cfg.occlusion_area_fraction_range[1]);
    const double aspect = rng.uniform(0.4, 2.5);  // w / h
    const double area = frac * image_w * image_h;
    int w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, image_w);
    int h = std::clamp(static_cast<int>(std::lround(area / std::max(w, 1))), 1, image_h);
    PixelRect r;
    r.w = w;
    r.h = h;
    r.x = rng.uniform_int(0, image_w - w);
    r.y = rng.uniform_int(0, image_h - h);
    if (frac > 0.0) s.rects.push_back(r);
  }
  return s;
}

ImageBuffer apply_augmentation(const ImageBuffer& img, const AugmentationSample& sample) {
  ImageBuffer lit = apply_lighting(img, sample.gain, sample.gradient);
  if (sample.rects.empty()) return lit;
  return apply_occlusion(lit, sample.rects);
}

}  // namespace tdvs
