#pragma once

#include <filesystem>
#include <iosfwd>

#include "tdvs/config.hpp"
#include "tdvs/dataset.hpp"
#include "tdvs/servo.hpp"
#include "tdvs/trainer.hpp"

namespace tdvs {

/// CLI exit codes.
struct ExitCode {
  static constexpr int kOk = 0;
  static constexpr int kConfigError = 1;   // usage/config problems, missing inputs
  static constexpr int kRuntimeFailure = 2;
  static constexpr int kNotConverged = 3;  // servo finished without converging
};

// Config -> domain assembly. Semantic violations (bad ranges, non-positive
// sizes) throw ConfigError naming the offending key.
RobotGeometry geometry_from(const RunConfig& cfg);
CameraIntrinsics intrinsics_from(const RunConfig& cfg);
PlanarScene scene_from(const RunConfig& cfg);
SpiralConfig spiral_from(const RunConfig& cfg);
LabelMap labels_from(const RunConfig& cfg);
AugmentationConfig dataset_aug_from(const RunConfig& cfg);
NetworkSpec network_from(const RunConfig& cfg);
TrainConfig train_config_from(const RunConfig& cfg);
ServoConfig servo_config_from(const RunConfig& cfg);
PerturbationConfig perturbation_from(const RunConfig& cfg);

struct EvalRun {
  TendonDisplacement start;
  std::uint64_t seed = 0;
};
std::vector<EvalRun> eval_runs_from(const RunConfig& cfg);

// Command entry points. Each echoes the effective configuration into
// out_dir, writes its artifacts there and returns an ExitCode value;
// diagnostics go to `log`.
int cmd_gen_dataset(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                    std::ostream& log);
int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
              std::ostream& log);
int cmd_servo(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
              std::ostream& log);
int cmd_eval(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
             std::ostream& log);

}  // namespace tdvs
