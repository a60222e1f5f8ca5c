#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "tdvs/augment.hpp"
#include "tdvs/dataset.hpp"
#include "tdvs/network.hpp"
#include "tdvs/render.hpp"

namespace tdvs {

struct ServoConfig {
  double lambda_mm = 0.4;  // mm of tendon travel per unit network output per second
  double dt_s = 1.0;
  int max_iterations = 300;
  double convergence_epsilon = 0.05;  // on ||raw output||_inf
  int hold_count = 10;                // consecutive below-epsilon iterations
  double actuation_limit_mm = 10.0;
  int net_input_w = 64;
  int net_input_h = 64;
  // Zero the error at the goal, v = -lambda (f(I) - f(I0)): the network is
  // evaluated once on the target image at setup and that constant is
  // subtracted from every subsequent output.
  bool zero_output_at_target = true;

  bool valid() const {
    return lambda_mm > 0.0 && dt_s > 0.0 && max_iterations >= 1 && convergence_epsilon > 0.0 &&
           hold_count >= 1 && actuation_limit_mm > 0.0;
  }
};

struct PerturbationConfig {
  bool joint_noise_enabled = false;
  double joint_noise_std_mm = 0.01;
  bool gain_scale_enabled = false;
  std::array<double, 2> gain_scale_range{0.25, 4.0};
  bool scene_augmentation_enabled = false;
  AugmentationConfig scene_aug;
  int refresh_period = 20;

  bool any_enabled() const {
    return joint_noise_enabled || gain_scale_enabled || scene_augmentation_enabled;
  }
};

struct ServoRecord {
  int iteration = 0;
  double q1_mm = 0.0, q2_mm = 0.0;  // state the frame was rendered at
  double f1 = 0.0, f2 = 0.0;        // raw network output
  double v1 = 0.0, v2 = 0.0;        // applied velocity, mm/s
  double sad = 0.0;                 // clean current view vs clean target
  double gain_scale = 1.0;
  double light_gain = 1.0, light_gradient = 0.0;
  int occlusion_rects = 0;
  double occlusion_area_fraction = 0.0;
};

struct ServoTrace {
  std::vector<ServoRecord> records;
  bool converged = false;
  int convergence_iteration = -1;
  TendonDisplacement final_q;
  std::array<double, 2> output_offset{0.0, 0.0};  // f(I0), subtracted from every output

  double initial_sad() const { return records.empty() ? 0.0 : records.front().sad; }
  double final_sad() const { return records.empty() ? 0.0 : records.back().sad; }
};

/// Bilinear resize to the network input size, returned as a (1, h, w, 3)
/// tensor. The same resize runs at dataset-generation time.
Tensor<float> preprocess(const ImageBuffer& img, int input_w, int input_h);

/// Zero-mean, unit-variance normalization over all pixels and channels.
/// Rejects constant images (their normalization is undefined).
ImageBuffer normalize_for_sad(const ImageBuffer& img);

/// Sum of absolute differences between two equally-sized images.
double sad(const ImageBuffer& a, const ImageBuffer& b);

/// Perturbation draw held fixed within one refresh window.
struct ActivePerturbation {
  double gain_scale = 1.0;
  std::optional<AugmentationSample> scene;
};

struct ServoStepResult {
  TendonDisplacement q_next;
  ServoRecord record;
};

/// One control iteration: render at fk(q), compute the clean-view SAD,
/// perturb the view the network sees, evaluate the network, subtract the
/// target-image offset, apply v = -lambda * (gain_scale * f), integrate and
/// clamp, add joint noise.
ServoStepResult servo_step(const TendonDisplacement& q, const NetworkSpec& spec,
                           const ParameterSet<float>& params, const PlanarScene& scene,
                           const RobotGeometry& geom, const CameraIntrinsics& intr,
                           const ServoConfig& cfg, const PerturbationConfig& perturb,
                           const ActivePerturbation& active, const ImageBuffer& target_norm,
                           const std::array<double, 2>& output_offset, Rng& noise_rng,
                           int iteration);

/// Optional per-iteration image sink: called with the clean current view and
/// the |I* - I0*| difference image (rescaled to [0, 1] for viewing).
using ServoImageSink = std::function<void(int iteration, const ImageBuffer& view,
                                          const ImageBuffer& diff)>;

/// Runs servo_step until the raw output stays below convergence_epsilon for
/// hold_count consecutive iterations, or max_iterations is reached.
/// Deterministic given the seed.
ServoTrace run_servo(const TendonDisplacement& start, const NetworkSpec& spec,
                     const ParameterSet<float>& params, const PlanarScene& scene,
                     const RobotGeometry& geom, const CameraIntrinsics& intr,
                     const ServoConfig& cfg, const PerturbationConfig& perturb, std::uint64_t seed,
                     const ServoImageSink* sink = nullptr);

void write_trace_csv(const ServoTrace& trace, const std::filesystem::path& path);

}  // namespace tdvs
