#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tdvs/augment.hpp"
#include "tdvs/render.hpp"
#include "tdvs/spiral.hpp"

namespace tdvs {

struct DatasetGenConfig {
  SpiralConfig spiral;
  AugmentationConfig aug;
  LabelMap labels;
  int net_input_w = 64;
  int net_input_h = 64;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct DatasetSampleMeta {
  int index = 0;
  TendonDisplacement q;
  std::array<double, 2> label{0.0, 0.0};
  AugmentationSample aug;
  std::string png;  // path relative to the dataset directory
};

struct DatasetManifest {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<DatasetSampleMeta> samples;
};

/// Walks the spiral path, renders each viewpoint, applies the per-sample
/// lighting/occlusion draw, downscales to the network input size and writes
/// PNGs plus manifest.csv under out_dir. Fully deterministic given the seed.
/// On failure every file created so far is removed before the error is
/// rethrown.
DatasetManifest generate_dataset(const PlanarScene& scene, const RobotGeometry& geom,
                                 const CameraIntrinsics& intr, const DatasetGenConfig& cfg,
                                 const std::filesystem::path& out_dir,
                                 std::vector<std::pair<std::string, std::string>> extra_header = {});

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

/// Images and labels decoded into memory for training, NHWC float in [0, 1].
struct TrainingSet {
  int width = 0;
  int height = 0;
  std::vector<float> images;  // count * height * width * 3
  std::vector<std::array<float, 2>> labels;

  int count() const { return static_cast<int>(labels.size()); }
  const float* image(int i) const {
    return images.data() + static_cast<size_t>(i) * height * width * 3;
  }
};

TrainingSet load_training_set(const std::filesystem::path& dataset_dir);

}  // namespace tdvs
