#pragma once

#include <cstdint>
#include <filesystem>

#include "tdvs/adam.hpp"
#include "tdvs/dataset.hpp"
#include "tdvs/network.hpp"

namespace tdvs {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  AdamConfig adam;  // desk-scale default learning rate 1e-3
  std::uint64_t shuffle_seed = 0;
  int threads = 0;

  bool valid() const { return epochs >= 0 && batch_size >= 1 && adam.valid(); }
};

struct EpochStat {
  int epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<EpochStat> epochs;

  double final_loss() const { return epochs.empty() ? 0.0 : epochs.back().mean_loss; }
};

struct TrainResult {
  ParameterSet<float> params;
  TrainingLog log;
  bool aborted_non_finite = false;
  int last_good_epoch = -1;  // most recent epoch with finite loss (0-based)
};

/// Shuffled mini-batch training with MSE + Adam. The last partial batch is
/// kept. Deterministic given the shuffle seed (per-item gradients are reduced
/// in index order regardless of thread count). A non-finite loss stops
/// training and returns the parameters from the last finite epoch.
TrainResult train(const TrainingSet& data, const NetworkSpec& spec, ParameterSet<float> params,
                  const TrainConfig& cfg);

void write_training_log_csv(const TrainingLog& log, const std::filesystem::path& path);

}  // namespace tdvs
