#include "tdvs/servo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tdvs/kinematics.hpp"
#include "tdvs/textio.hpp"

namespace tdvs {

Tensor<float> preprocess(const ImageBuffer& img, int input_w, int input_h) {
  if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("preprocess: empty image");
  const ImageBuffer resized = resize_bilinear(img, input_w, input_h);
  Tensor<float> out({1, input_h, input_w, 3});
  std::copy(resized.values.begin(), resized.values.end(), out.v.begin());
  return out;
}

ImageBuffer normalize_for_sad(const ImageBuffer& img) {
  if (img.values.empty()) throw std::invalid_argument("normalize_for_sad: empty image");
  double mean = 0.0;
  for (float v : img.values) mean += v;
  mean /= static_cast<double>(img.values.size());
  double var = 0.0;
  for (float v : img.values) {
    const double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(img.values.size());
  if (var <= 0.0)
    throw std::invalid_argument("normalize_for_sad: constant image has undefined normalization");
  const double inv_std = 1.0 / std::sqrt(var);
  ImageBuffer out(img.width, img.height);
  for (size_t i = 0; i < img.values.size(); ++i)
    out.values[i] = static_cast<float>((img.values[i] - mean) * inv_std);
  return out;
}

double sad(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_size(b)) throw std::invalid_argument("sad: image dimensions differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i)
    acc += std::abs(static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]));
  return acc;
}

ServoStepResult servo_step(const TendonDisplacement& q, const NetworkSpec& spec,
                           const ParameterSet<float>& params, const PlanarScene& scene,
                           const RobotGeometry& geom, const CameraIntrinsics& intr,
                           const ServoConfig& cfg, const PerturbationConfig& perturb,
                           const ActivePerturbation& active, const ImageBuffer& target_norm,
                           const std::array<double, 2>& output_offset, Rng& noise_rng,
                           int iteration) {
  ServoStepResult result;
  ServoRecord& rec = result.record;
  rec.iteration = iteration;
  rec.q1_mm = q.q1_mm;
  rec.q2_mm = q.q2_mm;

  const RigidPose pose = forward_kinematics(q, geom);
  const ImageBuffer view = render(scene, pose, intr);
  rec.sad = sad(normalize_for_sad(view), target_norm);

  Tensor<float> input;
  if (active.scene.has_value()) {
    const AugmentationSample& aug = *active.scene;
    rec.light_gain = aug.gain;
    rec.light_gradient = aug.gradient;
    rec.occlusion_rects = static_cast<int>(aug.rects.size());
    rec.occlusion_area_fraction = aug.covered_fraction(intr.width_px, intr.height_px);
    input = preprocess(apply_augmentation(view, aug), cfg.net_input_w, cfg.net_input_h);
  } else {
    input = preprocess(view, cfg.net_input_w, cfg.net_input_h);
  }

  const auto [output, cache] = forward(spec, params, input, 1);
  rec.f1 = output.v[0] - output_offset[0];
  rec.f2 = output.v[1] - output_offset[1];
  rec.gain_scale = active.gain_scale;

  rec.v1 = -cfg.lambda_mm * active.gain_scale * rec.f1;
  rec.v2 = -cfg.lambda_mm * active.gain_scale * rec.f2;

  double q1 = q.q1_mm + rec.v1 * cfg.dt_s;
  double q2 = q.q2_mm + rec.v2 * cfg.dt_s;
  if (perturb.joint_noise_enabled) {
    q1 += noise_rng.normal(0.0, perturb.joint_noise_std_mm);
    q2 += noise_rng.normal(0.0, perturb.joint_noise_std_mm);
  }
  result.q_next.q1_mm = std::clamp(q1, -cfg.actuation_limit_mm, cfg.actuation_limit_mm);
  result.q_next.q2_mm = std::clamp(q2, -cfg.actuation_limit_mm, cfg.actuation_limit_mm);
  return result;
}

ServoTrace run_servo(const TendonDisplacement& start, const NetworkSpec& spec,
                     const ParameterSet<float>& params, const PlanarScene& scene,
                     const RobotGeometry& geom, const CameraIntrinsics& intr,
                     const ServoConfig& cfg, const PerturbationConfig& perturb, std::uint64_t seed,
                     const ServoImageSink* sink) {
  if (!cfg.valid()) throw std::invalid_argument("run_servo: invalid servo config");
  if (perturb.refresh_period < 1)
    throw std::invalid_argument("run_servo: refresh period must be >= 1");
  if (start.norm_inf() > cfg.actuation_limit_mm)
    throw std::invalid_argument("run_servo: start displacement exceeds the actuation limit");

  const ImageBuffer target = render(scene, forward_kinematics({0.0, 0.0}, geom), intr);
  const ImageBuffer target_norm = normalize_for_sad(target);

  std::array<double, 2> offset{0.0, 0.0};
  if (cfg.zero_output_at_target) {
    const auto [f0, cache] =
        forward(spec, params, preprocess(target, cfg.net_input_w, cfg.net_input_h), 1);
    offset = {f0.v[0], f0.v[1]};
  }

  ServoTrace trace;
  trace.output_offset = offset;
  trace.records.reserve(cfg.max_iterations);
  TendonDisplacement q = start;
  Rng noise_rng = Rng::stream(seed, "servo-noise", 0);
  ActivePerturbation active;
  int below_count = 0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (iter % perturb.refresh_period == 0) {
      const auto window = static_cast<std::uint64_t>(iter / perturb.refresh_period);
      Rng window_rng = Rng::stream(seed, "servo-perturb", window);
      active.gain_scale =
          perturb.gain_scale_enabled
              ? window_rng.uniform(perturb.gain_scale_range[0], perturb.gain_scale_range[1])
              : 1.0;
      if (perturb.scene_augmentation_enabled) {
        active.scene =
            sample_augmentation(perturb.scene_aug, window_rng, intr.width_px, intr.height_px);
      } else {
        active.scene.reset();
      }
    }

    auto [q_next, rec] = servo_step(q, spec, params, scene, geom, intr, cfg, perturb, active,
                                    target_norm, offset, noise_rng, iter);
    trace.records.push_back(rec);

    if (sink) {
      const ImageBuffer view = render(scene, forward_kinematics(q, geom), intr);
      const ImageBuffer view_norm = normalize_for_sad(view);
      ImageBuffer diff(view.width, view.height);
      float peak = 0.0f;
      for (size_t i = 0; i < diff.values.size(); ++i) {
        diff.values[i] = std::abs(view_norm.values[i] - target_norm.values[i]);
        peak = std::max(peak, diff.values[i]);
      }
      if (peak > 0.0f)
        for (float& v : diff.values) v /= peak;
      (*sink)(iter, view, diff);
    }

    q = q_next;
    const double f_inf = std::max(std::abs(rec.f1), std::abs(rec.f2));
    below_count = f_inf < cfg.convergence_epsilon ? below_count + 1 : 0;
    if (below_count >= cfg.hold_count) {
      trace.converged = true;
      trace.convergence_iteration = iter;
      break;
    }
  }
  trace.final_q = q;
  return trace;
}

void write_trace_csv(const ServoTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open '" + path.string() + "'");
  out << "# converged = " << (trace.converged ? 1 : 0) << "\n";
  out << "# convergence_iteration = " << trace.convergence_iteration << "\n";
  out << "# final_q1_mm = " << num17(trace.final_q.q1_mm) << "\n";
  out << "# final_q2_mm = " << num17(trace.final_q.q2_mm) << "\n";
  out << "# output_offset_f1 = " << num17(trace.output_offset[0]) << "\n";
  out << "# output_offset_f2 = " << num17(trace.output_offset[1]) << "\n";
  out << "iteration,q1_mm,q2_mm,f1,f2,v1,v2,sad,gain_scale,light_gain,light_gradient,"
         "occlusion_rects,occlusion_area_fraction\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << num17(r.q1_mm) << ',' << num17(r.q2_mm) << ',' << num17(r.f1)
        << ',' << num17(r.f2) << ',' << num17(r.v1) << ',' << num17(r.v2) << ',' << num17(r.sad)
        << ',' << num17(r.gain_scale) << ',' << num17(r.light_gain) << ','
        << num17(r.light_gradient) << ',' << r.occlusion_rects << ','
        << num17(r.occlusion_area_fraction) << "\n";
  }
}

}  // namespace tdvs
