#pragma once

#include <array>
#include <vector>

#include "tdvs/kinematics.hpp"

namespace tdvs {

/// Joint-space spiral that sweeps all bending directions with density
/// increasing toward the origin: at step x of n,
///   q1 = A (x/n) cos(2 pi P x / n),  q2 = A (x/n) sin(2 pi P x / n).
struct SpiralConfig {
  double amplitude_mm = 7.0;
  double periods = 20.0;
  int sample_count = 5000;

  bool valid() const {
    return amplitude_mm > 0.0 && periods > 0.0 && sample_count >= 1;
  }
};

std::vector<TendonDisplacement> spiral_path(const SpiralConfig& cfg);

/// Label mapping that keeps ground truth inside (-1, 1):
/// label = tanh(beta * q) componentwise, q in millimeters.
struct LabelMap {
  double beta_per_mm = 1.0;
};

std::array<double, 2> label_of(const TendonDisplacement& q, const LabelMap& map);

}  // namespace tdvs
