#include "tdvs/spiral.hpp"

#include <cmath>
#include <stdexcept>

namespace tdvs {

std::vector<TendonDisplacement> spiral_path(const SpiralConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("spiral_path: invalid spiral config");
  std::vector<TendonDisplacement> path;
  path.reserve(cfg.sample_count);
  const double n = cfg.sample_count;
  for (int x = 1; x <= cfg.sample_count; ++x) {
    const double radius = cfg.amplitude_mm * (x / n);  // reaches A exactly at x = n
    const double angle = (cfg.periods / n) * x * 2.0 * M_PI;
    path.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  return path;
}

std::array<double, 2> label_of(const TendonDisplacement& q, const LabelMap& map) {
  if (!(map.beta_per_mm > 0.0)) throw std::invalid_argument("label_of: beta must be positive");
  return {std::tanh(map.beta_per_mm * q.q1_mm), std::tanh(map.beta_per_mm * q.q2_mm)};
}

}  // namespace tdvs
