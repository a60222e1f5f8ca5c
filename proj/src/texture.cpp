#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tdvs/render.hpp"
#include "tdvs/rng.hpp"

namespace tdvs {

namespace {

// Lattice value noise, bilinearly interpolated, periodic in neither axis.
struct NoiseGrid {
  int cells;
  std::vector<float> values;  // (cells+1)^2

  NoiseGrid(int cells_, Rng& rng) : cells(cells_), values((cells_ + 1) * (cells_ + 1)) {
    for (auto& v : values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  }

  float sample(double x, double y) const {  // x, y in [0, 1]
    const double gx = std::clamp(x, 0.0, 1.0) * cells;
    const double gy = std::clamp(y, 0.0, 1.0) * cells;
    const int x0 = std::min(static_cast<int>(gx), cells - 1);
    const int y0 = std::min(static_cast<int>(gy), cells - 1);
    const double fx = gx - x0, fy = gy - y0;
    auto at = [&](int i, int j) { return values[j * (cells + 1) + i]; };
    const double top = (1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0);
    const double bot = (1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1);
    return static_cast<float>((1 - fy) * top + fy * bot);
  }
};

}  // namespace

ImageBuffer make_procedural_texture(std::uint64_t seed, int size) {
  if (size < 8) throw std::invalid_argument("make_procedural_texture: size must be >= 8");
  Rng rng = Rng::stream(seed, "texture", 0);

  ImageBuffer img(size, size);

  // Base: smooth ramp between two random colors along a random direction.
  float c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = static_cast<float>(rng.uniform(0.15, 0.85));
    c1[c] = static_cast<float>(rng.uniform(0.15, 0.85));
  }
  const double ang = rng.uniform(0.0, 2.0 * M_PI);
  const double dx = std::cos(ang), dy = std::sin(ang);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double s = 0.5 + 0.5 * ((x / (size - 1.0) - 0.5) * dx + (y / (size - 1.0) - 0.5) * dy);
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = static_cast<float>((1 - s) * c0[c] + s * c1[c]);
    }
  }

  // Soft colored blobs, coarse to fine.
  const int blob_count = 60;
  for (int k = 0; k < blob_count; ++k) {
    const double bx = rng.uniform(0.0, 1.0), by = rng.uniform(0.0, 1.0);
    const double radius = rng.uniform(0.01, 0.18);
    float col[3];
    for (int c = 0; c < 3; ++c) col[c] = static_cast<float>(rng.uniform(0.0, 1.0));
    const float strength = static_cast<float>(rng.uniform(0.35, 0.9));
    const int x_lo = std::max(0, static_cast<int>((bx - 3 * radius) * size));
    const int x_hi = std::min(size - 1, static_cast<int>((bx + 3 * radius) * size));
    const int y_lo = std::max(0, static_cast<int>((by - 3 * radius) * size));
    const int y_hi = std::min(size - 1, static_cast<int>((by + 3 * radius) * size));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double ddx = x / (size - 1.0) - bx, ddy = y / (size - 1.0) - by;
        const double d2 = (ddx * ddx + ddy * ddy) / (radius * radius);
        if (d2 > 9.0) continue;
        const float w = strength * static_cast<float>(std::exp(-0.5 * d2));
        for (int c = 0; c < 3; ++c)
          img.at(x, y, c) = (1 - w) * img.at(x, y, c) + w * col[c];
      }
    }
  }

  // Value-noise octaves down to a few-texel wavelength.
  const int octaves[] = {8, 16, 32, 64, 128, 256};
  double amp = 0.16;
  for (int cells : octaves) {
    if (cells >= size / 2) break;
    NoiseGrid grid(cells, rng);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const float n = grid.sample(x / (size - 1.0), y / (size - 1.0));
        for (int c = 0; c < 3; ++c) img.at(x, y, c) += static_cast<float>(amp) * n;
      }
    amp *= 0.62;
  }

  clamp01(img);
  return img;
}

}  // namespace tdvs
