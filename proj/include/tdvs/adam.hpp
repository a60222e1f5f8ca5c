#pragma once

#include <cmath>
#include <stdexcept>

#include "tdvs/network.hpp"

namespace tdvs {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool valid() const {
    return learning_rate > 0.0 && beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0 &&
           epsilon > 0.0;
  }
};

/// First/second moment estimates for every trainable parameter, plus the
/// shared step counter.
template <typename T>
struct AdamState {
  ParameterSet<T> m;
  ParameterSet<T> v;
  long t = 0;

  static AdamState zeros_like(const NetworkSpec& spec, const ParameterSet<T>& params) {
    AdamState state;
    state.m.layers.resize(params.layers.size());
    state.v.layers.resize(params.layers.size());
    for (size_t i = 0; i < params.layers.size(); ++i) {
      if (params.layers[i].empty() || !spec.layers[i].trainable) continue;
      state.m.layers[i].w_dims = params.layers[i].w_dims;
      state.m.layers[i].w.assign(params.layers[i].w.size(), T(0));
      state.m.layers[i].b.assign(params.layers[i].b.size(), T(0));
      state.v.layers[i] = state.m.layers[i];
    }
    return state;
  }
};

/// One bias-corrected Adam update. Only layers present in `grads` (the
/// trainable ones) are touched; a non-finite gradient aborts with a
/// diagnostic.
template <typename T>
void adam_step(const NetworkSpec& spec, ParameterSet<T>& params, const ParameterSet<T>& grads,
               AdamState<T>& state, const AdamConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("adam_step: invalid optimizer config");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

  for (size_t li = 0; li < params.layers.size(); ++li) {
    if (li >= grads.layers.size() || grads.layers[li].empty()) continue;
    if (!spec.layers[li].trainable) continue;
    auto update = [&](std::vector<T>& theta, const std::vector<T>& g, std::vector<T>& m,
                      std::vector<T>& v) {
      for (size_t k = 0; k < theta.size(); ++k) {
        const double gk = static_cast<double>(g[k]);
        if (!std::isfinite(gk))
          throw std::runtime_error("adam_step: non-finite gradient in layer " + std::to_string(li));
        const double mk = cfg.beta1 * static_cast<double>(m[k]) + (1.0 - cfg.beta1) * gk;
        const double vk = cfg.beta2 * static_cast<double>(v[k]) + (1.0 - cfg.beta2) * gk * gk;
        m[k] = static_cast<T>(mk);
        v[k] = static_cast<T>(vk);
        const double m_hat = mk / bc1;
        const double v_hat = vk / bc2;
        theta[k] = static_cast<T>(static_cast<double>(theta[k]) -
                                  cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
      }
    };
    update(params.layers[li].w, grads.layers[li].w, state.m.layers[li].w, state.v.layers[li].w);
    update(params.layers[li].b, grads.layers[li].b, state.m.layers[li].b, state.v.layers[li].b);
  }
}

}  // namespace tdvs
