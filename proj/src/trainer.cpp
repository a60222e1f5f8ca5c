#include "tdvs/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tdvs/textio.hpp"

namespace tdvs {

TrainResult train(const TrainingSet& data, const NetworkSpec& spec, ParameterSet<float> params,
                  const TrainConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("train: invalid training config");
  if (data.count() == 0) throw std::invalid_argument("train: dataset is empty");
  if (data.width != spec.input_w || data.height != spec.input_h)
    throw std::invalid_argument("train: dataset image size does not match network input");

  const int n = data.count();
  const size_t stride = static_cast<size_t>(data.width) * data.height * 3;

  TrainResult result;
  auto state = AdamState<float>::zeros_like(spec, params);
  ParameterSet<float> good_params = params;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng = Rng::stream(cfg.shuffle_seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

    double loss_sum = 0.0;  // sum over all entries, for the per-epoch mean
    long entries = 0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n - begin);
      Tensor<float> batch({bs, data.height, data.width, 3});
      Tensor<float> target({bs, 2});
      for (int k = 0; k < bs; ++k) {
        const int src = order[begin + k];
        std::copy(data.images.begin() + src * stride, data.images.begin() + (src + 1) * stride,
                  batch.v.begin() + k * static_cast<long long>(stride));
        target.v[k * 2] = data.labels[src][0];
        target.v[k * 2 + 1] = data.labels[src][1];
      }
      auto [pred, cache] = forward(spec, params, batch, cfg.threads);
      auto [loss, grad] = mse_loss(pred, target);
      if (!std::isfinite(loss)) {
        result.aborted_non_finite = true;
        result.params = std::move(good_params);
        return result;
      }
      loss_sum += loss * static_cast<double>(2 * bs);
      entries += 2 * bs;
      const auto grads = backward(spec, params, cache, grad, cfg.threads);
      adam_step(spec, params, grads, state, cfg.adam);
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back({epoch, loss_sum / static_cast<double>(entries), seconds});
    result.last_good_epoch = epoch;
    good_params = params;
  }

  result.params = std::move(params);
  return result;
}

void write_training_log_csv(const TrainingLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_training_log_csv: cannot open '" + path.string() + "'");
  out << "epoch,mean_loss,seconds\n";
  for (const auto& e : log.epochs)
    out << e.epoch << ',' << num17(e.mean_loss) << ',' << num9(e.seconds) << "\n";
}

}  // namespace tdvs
