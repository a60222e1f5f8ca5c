#include "tdvs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "tdvs/parallel.hpp"
#include "tdvs/textio.hpp"

namespace tdvs {

namespace {

double positive(const RunConfig& cfg, const std::string& key) {
  const double v = cfg.get_double(key);
  if (!(v > 0.0)) throw ConfigError("config: key '" + key + "' must be positive, got " + num9(v));
  return v;
}

int positive_int(const RunConfig& cfg, const std::string& key) {
  const int v = cfg.get_int(key);
  if (v <= 0) throw ConfigError("config: key '" + key + "' must be positive, got " + std::to_string(v));
  return v;
}

std::array<double, 2> range_of(const RunConfig& cfg, const std::string& lo_key,
                               const std::string& hi_key) {
  const double lo = cfg.get_double(lo_key), hi = cfg.get_double(hi_key);
  if (lo > hi)
    throw ConfigError("config: '" + lo_key + "' (" + num9(lo) + ") exceeds '" + hi_key + "' (" +
                      num9(hi) + ")");
  return {lo, hi};
}

std::filesystem::path required_input(const RunConfig& cfg, const std::string& key) {
  const std::string& value = cfg.get_string(key);
  if (value.empty()) throw ConfigError("config: key '" + key + "' must be set for this command");
  std::filesystem::path p(value);
  if (!std::filesystem::exists(p))
    throw ConfigError("config: key '" + key + "' points to missing path '" + value + "'");
  return p;
}

}  // namespace

RobotGeometry geometry_from(const RunConfig& cfg) {
  RobotGeometry geom;
  geom.backbone_length_m = positive(cfg, "robot_length_m");
  geom.tendon_offset_m = positive(cfg, "robot_tendon_offset_m");
  geom.backbone_radius_m = positive(cfg, "robot_backbone_radius_m");
  geom.youngs_modulus_pa = cfg.get_double("robot_youngs_modulus_pa");
  geom.density_kg_m3 = cfg.get_double("robot_density_kg_m3");
  return geom;
}

CameraIntrinsics intrinsics_from(const RunConfig& cfg) {
  CameraIntrinsics intr;
  intr.width_px = positive_int(cfg, "camera_width_px");
  intr.height_px = positive_int(cfg, "camera_height_px");
  intr.horizontal_fov_deg = positive(cfg, "camera_hfov_deg");
  if (intr.horizontal_fov_deg >= 180.0)
    throw ConfigError("config: key 'camera_hfov_deg' must be below 180");
  return intr;
}

PlanarScene scene_from(const RunConfig& cfg) {
  PlanarScene scene;
  scene.plane_distance_m = positive(cfg, "plane_distance_m");
  scene.plane_halfwidth_m = positive(cfg, "plane_halfwidth_m");

  const auto rgb = split(cfg.get_string("background_rgb"), ',');
  if (rgb.size() != 3)
    throw ConfigError("config: key 'background_rgb' expects three comma-separated values");
  for (int c = 0; c < 3; ++c) {
    try {
      scene.background[c] = std::clamp(std::stof(std::string(trim(rgb[c]))), 0.0f, 1.0f);
    } catch (...) {
      throw ConfigError("config: key 'background_rgb' expects real values, got '" + rgb[c] + "'");
    }
  }

  const std::string& texture_path = cfg.get_string("texture_path");
  if (texture_path.empty()) {
    scene.target_texture =
        make_procedural_texture(cfg.get_u64("texture_seed"), positive_int(cfg, "texture_size"));
  } else {
    if (!std::filesystem::exists(texture_path))
      throw ConfigError("config: key 'texture_path' points to missing file '" + texture_path + "'");
    scene.target_texture = read_png(texture_path);
  }
  return scene;
}

SpiralConfig spiral_from(const RunConfig& cfg) {
  SpiralConfig spiral;
  spiral.amplitude_mm = positive(cfg, "spiral_amplitude_mm");
  spiral.periods = positive(cfg, "spiral_periods");
  spiral.sample_count = positive_int(cfg, "spiral_samples");
  return spiral;
}

LabelMap labels_from(const RunConfig& cfg) {
  return LabelMap{positive(cfg, "label_beta_per_mm")};
}

AugmentationConfig dataset_aug_from(const RunConfig& cfg) {
  AugmentationConfig aug;
  aug.lighting_gain_range = range_of(cfg, "aug_light_gain_min", "aug_light_gain_max");
  aug.lighting_gradient_range = range_of(cfg, "aug_light_gradient_min", "aug_light_gradient_max");
  aug.occlusion_count_range = {cfg.get_int("aug_occlusion_count_min"),
                               cfg.get_int("aug_occlusion_count_max")};
  aug.occlusion_area_fraction_range =
      range_of(cfg, "aug_occlusion_frac_min", "aug_occlusion_frac_max");
  aug.seed = cfg.get_u64("seed");
  if (!aug.valid()) throw ConfigError("config: dataset augmentation ranges are invalid");
  return aug;
}

NetworkSpec network_from(const RunConfig& cfg) {
  const int size = positive_int(cfg, "net_input_size");
  NetworkSpec spec;
  try {
    spec = NetworkSpec::from_string(size, size, cfg.get_string("net_layers"));
  } catch (const std::exception& e) {
    throw ConfigError("config: key 'net_layers': " + std::string(e.what()));
  }
  const int freeze = cfg.get_int("net_freeze_prefix");
  if (freeze < 0 || freeze > static_cast<int>(spec.layers.size()))
    throw ConfigError("config: key 'net_freeze_prefix' out of range");
  for (int i = 0; i < freeze; ++i) spec.layers[i].trainable = false;
  return spec;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig train;
  train.epochs = cfg.get_int("train_epochs");
  if (train.epochs < 0) throw ConfigError("config: key 'train_epochs' must be >= 0");
  train.batch_size = positive_int(cfg, "train_batch_size");
  train.adam.learning_rate = positive(cfg, "train_learning_rate");
  train.adam.beta1 = cfg.get_double("train_beta1");
  train.adam.beta2 = cfg.get_double("train_beta2");
  train.adam.epsilon = positive(cfg, "train_epsilon");
  if (!train.adam.valid())
    throw ConfigError("config: Adam parameters out of range (betas must be in (0,1))");
  train.shuffle_seed = cfg.get_u64("seed");
  train.threads = cfg.get_int("threads");
  return train;
}

ServoConfig servo_config_from(const RunConfig& cfg) {
  ServoConfig servo;
  servo.lambda_mm = positive(cfg, "servo_lambda_mm");
  servo.dt_s = positive(cfg, "servo_dt_s");
  servo.max_iterations = positive_int(cfg, "servo_max_iterations");
  servo.convergence_epsilon = positive(cfg, "servo_epsilon");
  servo.hold_count = positive_int(cfg, "servo_hold_count");
  servo.actuation_limit_mm = positive(cfg, "actuation_limit_mm");
  servo.net_input_w = positive_int(cfg, "net_input_size");
  servo.net_input_h = servo.net_input_w;
  servo.zero_output_at_target = cfg.get_bool("servo_zero_at_target");
  return servo;
}

PerturbationConfig perturbation_from(const RunConfig& cfg) {
  PerturbationConfig p;
  p.joint_noise_enabled = cfg.get_bool("perturb_joint_noise");
  p.joint_noise_std_mm = cfg.get_double("perturb_joint_noise_std_mm");
  if (p.joint_noise_std_mm < 0.0)
    throw ConfigError("config: key 'perturb_joint_noise_std_mm' must be >= 0");
  p.gain_scale_enabled = cfg.get_bool("perturb_gain_scale");
  p.gain_scale_range = range_of(cfg, "perturb_gain_scale_min", "perturb_gain_scale_max");
  if (p.gain_scale_range[0] <= 0.0)
    throw ConfigError("config: key 'perturb_gain_scale_min' must be positive");
  p.scene_augmentation_enabled = cfg.get_bool("perturb_scene");
  p.scene_aug.lighting_gain_range = range_of(cfg, "perturb_light_gain_min", "perturb_light_gain_max");
  p.scene_aug.lighting_gradient_range =
      range_of(cfg, "perturb_light_gradient_min", "perturb_light_gradient_max");
  p.scene_aug.occlusion_count_range = {cfg.get_int("perturb_occlusion_count_min"),
                                       cfg.get_int("perturb_occlusion_count_max")};
  p.scene_aug.occlusion_area_fraction_range =
      range_of(cfg, "perturb_occlusion_frac_min", "perturb_occlusion_frac_max");
  if (!p.scene_aug.valid()) throw ConfigError("config: servo perturbation ranges are invalid");
  p.refresh_period = positive_int(cfg, "perturb_refresh_period");
  return p;
}

std::vector<EvalRun> eval_runs_from(const RunConfig& cfg) {
  std::vector<TendonDisplacement> starts;
  const std::string& starts_str = cfg.get_string("eval_starts");
  if (!trim(starts_str).empty()) {
    for (const auto& pair_str : split(starts_str, ';')) {
      if (trim(pair_str).empty()) continue;
      const auto parts = split(pair_str, ',');
      if (parts.size() != 2)
        throw ConfigError("config: key 'eval_starts' expects 'q1,q2' pairs separated by ';', got '" +
                          pair_str + "'");
      try {
        starts.push_back({std::stod(std::string(trim(parts[0]))),
                          std::stod(std::string(trim(parts[1])))});
      } catch (...) {
        throw ConfigError("config: key 'eval_starts' has a non-numeric entry '" + pair_str + "'");
      }
    }
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split(cfg.get_string("eval_seeds"), ',')) {
    if (trim(s).empty()) continue;
    try {
      seeds.push_back(std::stoull(std::string(trim(s))));
    } catch (...) {
      throw ConfigError("config: key 'eval_seeds' expects comma-separated integers, got '" + s + "'");
    }
  }
  std::vector<EvalRun> runs;
  for (const auto& q : starts)
    for (const auto seed : seeds) runs.push_back({q, seed});
  return runs;
}

namespace {

void prepare_out_dir(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  cfg.write_effective(out_dir / "effective_config.txt");
}

int run_command(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return ExitCode::kConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return ExitCode::kRuntimeFailure;
  }
}

}  // namespace

int cmd_gen_dataset(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                    std::ostream& log) {
  return run_command(log, [&] {
    const RunConfig cfg = RunConfig::parse_file(config_path);
    const PlanarScene scene = scene_from(cfg);
    DatasetGenConfig gen;
    gen.spiral = spiral_from(cfg);
    gen.aug = dataset_aug_from(cfg);
    gen.labels = labels_from(cfg);
    gen.net_input_w = gen.net_input_h = positive_int(cfg, "net_input_size");
    gen.seed = cfg.get_u64("seed");
    gen.threads = cfg.get_int("threads");

    prepare_out_dir(cfg, out_dir);
    for (const auto& [k, v] : cfg.effective()) log << k << " = " << v << "\n";

    const auto manifest =
        generate_dataset(scene, geometry_from(cfg), intrinsics_from(cfg), gen, out_dir,
                         {{"texture_path", cfg.get_string("texture_path")},
                          {"texture_size", std::to_string(cfg.get_int("texture_size"))}});
    log << "wrote " << manifest.samples.size() << " samples to " << out_dir.string() << "\n";
    return ExitCode::kOk;
  });
}

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
              std::ostream& log) {
  return run_command(log, [&] {
    const RunConfig cfg = RunConfig::parse_file(config_path);
    const auto dataset_dir = required_input(cfg, "dataset_dir");
    const NetworkSpec spec = network_from(cfg);
    const TrainConfig train_cfg = train_config_from(cfg);

    prepare_out_dir(cfg, out_dir);
    const TrainingSet data = load_training_set(dataset_dir);
    if (data.width != spec.input_w || data.height != spec.input_h)
      throw ConfigError("config: dataset images are " + std::to_string(data.width) + "x" +
                        std::to_string(data.height) + " but 'net_input_size' is " +
                        std::to_string(spec.input_w));

    auto params = init_parameters<float>(spec, cfg.get_u64("seed"));
    const TrainResult result = train(data, spec, std::move(params), train_cfg);

    save_parameters(result.params, out_dir / "checkpoint.cnnp");
    write_training_log_csv(result.log, out_dir / "training_log.csv");
    if (result.aborted_non_finite) {
      log << "error: training loss became non-finite; checkpoint holds last good epoch "
          << result.last_good_epoch << "\n";
      return ExitCode::kRuntimeFailure;
    }
    log << "trained " << train_cfg.epochs << " epochs";
    if (!result.log.epochs.empty()) log << ", final mean loss " << num9(result.log.final_loss());
    log << "\n";
    return ExitCode::kOk;
  });
}

int cmd_servo(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
              std::ostream& log) {
  return run_command(log, [&] {
    const RunConfig cfg = RunConfig::parse_file(config_path);
    const auto checkpoint = required_input(cfg, "checkpoint");
    const NetworkSpec spec = network_from(cfg);
    const ParameterSet<float> params = load_parameters(spec, checkpoint);
    const PlanarScene scene = scene_from(cfg);
    const RobotGeometry geom = geometry_from(cfg);
    const CameraIntrinsics intr = intrinsics_from(cfg);
    const ServoConfig servo_cfg = servo_config_from(cfg);
    const PerturbationConfig perturb = perturbation_from(cfg);
    const TendonDisplacement start{cfg.get_double("servo_start_q1_mm"),
                                   cfg.get_double("servo_start_q2_mm")};

    prepare_out_dir(cfg, out_dir);

    ServoImageSink sink;
    if (cfg.get_bool("servo_save_images")) {
      const auto frames_dir = out_dir / "frames";
      std::filesystem::create_directories(frames_dir);
      sink = [frames_dir](int iter, const ImageBuffer& view, const ImageBuffer& diff) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%04d.png", iter);
        write_png(view, frames_dir / name);
        std::snprintf(name, sizeof(name), "diff_%04d.png", iter);
        write_png(diff, frames_dir / name);
      };
    }

    const ServoTrace trace = run_servo(start, spec, params, scene, geom, intr, servo_cfg, perturb,
                                       cfg.get_u64("seed"), sink ? &sink : nullptr);
    write_trace_csv(trace, out_dir / "trace.csv");

    log << "iterations = " << trace.records.size() << ", converged = " << trace.converged
        << ", final q = (" << num9(trace.final_q.q1_mm) << ", " << num9(trace.final_q.q2_mm)
        << ") mm, SAD " << num9(trace.initial_sad()) << " -> " << num9(trace.final_sad()) << "\n";
    return trace.converged ? ExitCode::kOk : ExitCode::kNotConverged;
  });
}

int cmd_eval(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
             std::ostream& log) {
  return run_command(log, [&] {
    const RunConfig cfg = RunConfig::parse_file(config_path);
    const auto checkpoint = required_input(cfg, "checkpoint");
    const NetworkSpec spec = network_from(cfg);
    const ParameterSet<float> params = load_parameters(spec, checkpoint);
    const PlanarScene scene = scene_from(cfg);
    const RobotGeometry geom = geometry_from(cfg);
    const CameraIntrinsics intr = intrinsics_from(cfg);
    const ServoConfig servo_cfg = servo_config_from(cfg);
    const PerturbationConfig perturb = perturbation_from(cfg);
    const std::vector<EvalRun> runs = eval_runs_from(cfg);

    prepare_out_dir(cfg, out_dir);

    std::vector<ServoTrace> traces(runs.size());
    parallel_for(
        static_cast<long long>(runs.size()),
        [&](long long i) {
          traces[i] = run_servo(runs[i].start, spec, params, scene, geom, intr, servo_cfg, perturb,
                                runs[i].seed, nullptr);
        },
        cfg.get_int("threads"));

    std::ofstream out(out_dir / "summary.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cmd_eval: cannot write summary.csv");
    out << "start_q1_mm,start_q2_mm,seed,converged,iterations,final_q1_mm,final_q2_mm,"
           "final_q_norm_mm,initial_sad,final_sad\n";
    int successes = 0;
    std::vector<int> converged_iters;
    for (size_t i = 0; i < runs.size(); ++i) {
      const ServoTrace& t = traces[i];
      if (t.converged) {
        ++successes;
        converged_iters.push_back(static_cast<int>(t.records.size()));
      }
      out << num17(runs[i].start.q1_mm) << ',' << num17(runs[i].start.q2_mm) << ',' << runs[i].seed
          << ',' << (t.converged ? 1 : 0) << ',' << t.records.size() << ','
          << num17(t.final_q.q1_mm) << ',' << num17(t.final_q.q2_mm) << ','
          << num17(t.final_q.norm2()) << ',' << num17(t.initial_sad()) << ','
          << num17(t.final_sad()) << "\n";
    }
    double median_iters = -1.0;
    if (!converged_iters.empty()) {
      std::sort(converged_iters.begin(), converged_iters.end());
      const size_t mid = converged_iters.size() / 2;
      median_iters = converged_iters.size() % 2 == 1
                         ? converged_iters[mid]
                         : (converged_iters[mid - 1] + converged_iters[mid]) / 2.0;
    }
    const double rate = runs.empty() ? 0.0 : static_cast<double>(successes) / runs.size();
    out << "# aggregate: runs = " << runs.size() << ", success_rate = " << num9(rate)
        << ", median_iterations = " << num9(median_iters) << "\n";
    log << "eval: " << successes << "/" << runs.size() << " converged, median iterations "
        << num9(median_iters) << "\n";
    return ExitCode::kOk;
  });
}

}  // namespace tdvs
