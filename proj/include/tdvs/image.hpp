#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tdvs {

/// RGB raster, row-major, values in [0, 1]. Channel order R, G, B.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // height * width * 3

  ImageBuffer() = default;
  ImageBuffer(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h * 3, 0.0f) {}

  static ImageBuffer filled(int w, int h, float r, float g, float b);

  float& at(int x, int y, int c) { return values[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return values[(static_cast<size_t>(y) * width + x) * 3 + c]; }

  bool same_size(const ImageBuffer& other) const {
    return width == other.width && height == other.height;
  }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

void clamp01(ImageBuffer& img);

/// Bilinear sample of one channel at continuous pixel coordinates
/// (x, y measured in pixel centers); coordinates are clamped to the edge.
float bilinear_sample(const ImageBuffer& img, double x, double y, int c);

/// Bilinear resize with pixel-center alignment: output pixel (i, j) samples
/// the source at ((j + 0.5) * w/out_w - 0.5, (i + 0.5) * h/out_h - 0.5).
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h);

/// 8-bit RGB PNG I/O. Reading converts gray/palette/alpha files to RGB and
/// maps to [0, 1]; writing rounds to the nearest 8-bit level.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace tdvs
