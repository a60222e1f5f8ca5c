#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdvs/parallel.hpp"
#include "tdvs/rng.hpp"

namespace tdvs {

/// Minimal dense tensor: dims are (N, H, W, C) for image data and (N, F)
/// after flattening.
template <typename T>
struct Tensor {
  std::vector<int> dims;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    size_t total = 1;
    for (int x : dims) total *= static_cast<size_t>(x);
    v.assign(total, T(0));
  }

  int dim(int i) const { return dims[i]; }
  size_t size() const { return v.size(); }
};

enum class LayerKind { Conv3x3, Relu, MaxPool2, Flatten, Dense, LinearOutput };

std::string layer_kind_name(LayerKind kind);

/// One layer of the VGG-style stack. Conv layers are fixed 3x3/stride 1/
/// pad 1; pooling is fixed 2x2/stride 2. `features` is the output channel
/// (conv) or feature (dense/linear) count.
struct LayerSpec {
  LayerKind kind;
  int features = 0;
  bool trainable = true;
};

struct NetworkSpec {
  int input_h = 64;
  int input_w = 64;
  int input_c = 3;
  std::vector<LayerSpec> layers;

  /// conv8-pool-conv16-pool-conv32-pool-conv32-pool-dense64-linear2 at
  /// 64x64x3, ReLU after every conv and dense layer.
  static NetworkSpec desk_reference();

  /// Parse a comma-separated layer list like
  /// "conv8,relu,pool,flatten,dense64,linear2".
  static NetworkSpec from_string(int input_h, int input_w, const std::string& layers);

  std::string to_string() const;
};

/// Shape of the data between layers: image-like (h, w, c) or flat (f).
struct ActShape {
  bool flat = false;
  int h = 0, w = 0, c = 0;
  int f = 0;

  size_t count() const { return flat ? static_cast<size_t>(f) : static_cast<size_t>(h) * w * c; }
  bool operator==(const ActShape&) const = default;
};

/// Output shape of every layer (index 0 = input shape, i+1 = after layer i).
/// Throws with the offending layer named if propagation fails or the last
/// layer is not linear_output(2).
std::vector<ActShape> propagate_shapes(const NetworkSpec& spec);

template <typename T>
struct LayerParams {
  std::vector<T> w;
  std::vector<T> b;
  // Conv weights are (out_c, 3, 3, in_c) row-major; dense/linear weights are
  // (out_f, in_f).
  std::array<int, 4> w_dims{0, 0, 0, 0};

  bool empty() const { return w.empty() && b.empty(); }
};

template <typename T>
struct ParameterSet {
  std::vector<LayerParams<T>> layers;  // one entry per spec layer

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    out.layers.resize(layers.size());
    for (size_t i = 0; i < layers.size(); ++i) {
      out.layers[i].w_dims = layers[i].w_dims;
      out.layers[i].w.assign(layers[i].w.begin(), layers[i].w.end());
      out.layers[i].b.assign(layers[i].b.begin(), layers[i].b.end());
    }
    return out;
  }
};

/// Per-layer activations captured by forward() for use in backward().
template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> inputs;        // input of each layer, batch-shaped
  std::vector<std::vector<int>> pool_argmax;  // per layer (empty unless pool)
  Tensor<T> output;
};

namespace detail {

inline int require_positive(int v, const char* what) {
  if (v <= 0) throw std::invalid_argument(std::string("network: ") + what + " must be positive");
  return v;
}

}  // namespace detail

/// He-scaled normal init (std = sqrt(2 / fan_in)) for conv/dense weights,
/// zero biases. Deterministic given the seed.
template <typename T>
ParameterSet<T> init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
  const auto shapes = propagate_shapes(spec);
  ParameterSet<T> params;
  params.layers.resize(spec.layers.size());
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    LayerParams<T>& p = params.layers[i];
    Rng rng = Rng::stream(seed, "init", static_cast<std::uint64_t>(i));
    if (layer.kind == LayerKind::Conv3x3) {
      const int in_c = shapes[i].c;
      p.w_dims = {layer.features, 3, 3, in_c};
      const double std_dev = std::sqrt(2.0 / (9.0 * in_c));
      p.w.resize(static_cast<size_t>(layer.features) * 9 * in_c);
      for (auto& w : p.w) w = static_cast<T>(rng.normal(0.0, std_dev));
      p.b.assign(layer.features, T(0));
    } else if (layer.kind == LayerKind::Dense || layer.kind == LayerKind::LinearOutput) {
      const int in_f = static_cast<int>(shapes[i].count());
      p.w_dims = {layer.features, in_f, 0, 0};
      const double std_dev = std::sqrt(2.0 / in_f);
      p.w.resize(static_cast<size_t>(layer.features) * in_f);
      for (auto& w : p.w) w = static_cast<T>(rng.normal(0.0, std_dev));
      p.b.assign(layer.features, T(0));
    }
  }
  return params;
}

namespace detail {

// Dot products accumulate in double regardless of storage type.
template <typename T>
void conv3x3_forward(const T* in, int h, int w, int in_c, const T* kw, const T* kb, int out_c,
                     T* out) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int o = 0; o < out_c; ++o) {
        double acc = static_cast<double>(kb[o]);
        const T* kernel = kw + static_cast<size_t>(o) * 9 * in_c;
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = x + dx;
            if (sx < 0 || sx >= w) continue;
            const T* src = in + (static_cast<size_t>(sy) * w + sx) * in_c;
            const T* kk = kernel + ((dy + 1) * 3 + (dx + 1)) * in_c;
            for (int ci = 0; ci < in_c; ++ci) acc += static_cast<double>(src[ci]) * kk[ci];
          }
        }
        out[(static_cast<size_t>(y) * w + x) * out_c + o] = static_cast<T>(acc);
      }
    }
  }
}

template <typename T>
void conv3x3_backward(const T* in, const T* gout, int h, int w, int in_c, const T* kw, int out_c,
                      T* gin, T* gw, T* gb) {
  // gb
  for (int o = 0; o < out_c; ++o) {
    double acc = 0.0;
    for (size_t p = 0; p < static_cast<size_t>(h) * w; ++p)
      acc += static_cast<double>(gout[p * out_c + o]);
    gb[o] += static_cast<T>(acc);
  }
  // gw and gin
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const T* go = gout + (static_cast<size_t>(y) * w + x) * out_c;
      for (int dy = -1; dy <= 1; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = x + dx;
          if (sx < 0 || sx >= w) continue;
          const size_t src_off = (static_cast<size_t>(sy) * w + sx) * in_c;
          const int k_off = ((dy + 1) * 3 + (dx + 1)) * in_c;
          for (int o = 0; o < out_c; ++o) {
            const double g = static_cast<double>(go[o]);
            const T* kernel = kw + (static_cast<size_t>(o) * 9 + (dy + 1) * 3 + (dx + 1)) * in_c;
            T* gw_k = gw + (static_cast<size_t>(o) * 9) * in_c + k_off;
            for (int ci = 0; ci < in_c; ++ci) {
              gw_k[ci] += static_cast<T>(g * in[src_off + ci]);
              gin[src_off + ci] += static_cast<T>(g * kernel[ci]);
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Runs the stack over a batch (items processed independently, optionally in
/// parallel) and returns the N x 2 outputs plus the cache backward() needs.
template <typename T>
std::pair<Tensor<T>, ForwardCache<T>> forward(const NetworkSpec& spec,
                                              const ParameterSet<T>& params,
                                              const Tensor<T>& batch, int threads = 0) {
  const auto shapes = propagate_shapes(spec);
  if (params.layers.size() != spec.layers.size())
    throw std::invalid_argument("forward: parameter set does not match spec");
  if (batch.dims.size() != 4 || batch.dim(1) != spec.input_h || batch.dim(2) != spec.input_w ||
      batch.dim(3) != spec.input_c)
    throw std::invalid_argument("forward: batch shape does not match network input size");

  const int n = batch.dim(0);
  const size_t layer_count = spec.layers.size();

  ForwardCache<T> cache;
  cache.inputs.resize(layer_count);
  cache.pool_argmax.resize(layer_count);
  for (size_t i = 0; i < layer_count; ++i) {
    const ActShape& s = shapes[i];
    cache.inputs[i] = s.flat ? Tensor<T>({n, s.f}) : Tensor<T>({n, s.h, s.w, s.c});
    if (spec.layers[i].kind == LayerKind::MaxPool2)
      cache.pool_argmax[i].assign(static_cast<size_t>(n) * shapes[i + 1].count(), 0);
  }
  cache.output = Tensor<T>({n, 2});

  parallel_for(
      n,
      [&](long long item) {
        std::vector<T> cur(batch.v.begin() + item * static_cast<long long>(shapes[0].count()),
                           batch.v.begin() + (item + 1) * static_cast<long long>(shapes[0].count()));
        for (size_t i = 0; i < layer_count; ++i) {
          const LayerSpec& layer = spec.layers[i];
          const ActShape& in_s = shapes[i];
          const ActShape& out_s = shapes[i + 1];
          std::copy(cur.begin(), cur.end(),
                    cache.inputs[i].v.begin() + item * static_cast<long long>(in_s.count()));
          std::vector<T> next(out_s.count());
          switch (layer.kind) {
            case LayerKind::Conv3x3:
              detail::conv3x3_forward(cur.data(), in_s.h, in_s.w, in_s.c,
                                      params.layers[i].w.data(), params.layers[i].b.data(),
                                      layer.features, next.data());
              break;
            case LayerKind::Relu:
              for (size_t k = 0; k < cur.size(); ++k) next[k] = cur[k] > T(0) ? cur[k] : T(0);
              break;
            case LayerKind::MaxPool2: {
              int* argmax = cache.pool_argmax[i].data() + item * static_cast<long long>(out_s.count());
              for (int y = 0; y < out_s.h; ++y)
                for (int x = 0; x < out_s.w; ++x)
                  for (int c = 0; c < out_s.c; ++c) {
                    T best{};
                    int best_idx = -1;
                    for (int dy = 0; dy < 2; ++dy)
                      for (int dx = 0; dx < 2; ++dx) {
                        const int idx =
                            ((2 * y + dy) * in_s.w + (2 * x + dx)) * in_s.c + c;
                        if (best_idx < 0 || cur[idx] > best) {
                          best = cur[idx];
                          best_idx = idx;
                        }
                      }
                    const size_t out_idx = (static_cast<size_t>(y) * out_s.w + x) * out_s.c + c;
                    next[out_idx] = best;
                    argmax[out_idx] = best_idx;
                  }
              break;
            }
            case LayerKind::Flatten:
              next = cur;  // same memory order, flat view
              break;
            case LayerKind::Dense:
            case LayerKind::LinearOutput: {
              const int in_f = in_s.flat ? in_s.f : static_cast<int>(in_s.count());
              for (int o = 0; o < layer.features; ++o) {
                double acc = static_cast<double>(params.layers[i].b[o]);
                const T* row = params.layers[i].w.data() + static_cast<size_t>(o) * in_f;
                for (int k = 0; k < in_f; ++k) acc += static_cast<double>(row[k]) * cur[k];
                next[o] = static_cast<T>(acc);
              }
              break;
            }
          }
          cur = std::move(next);
        }
        cache.output.v[item * 2] = cur[0];
        cache.output.v[item * 2 + 1] = cur[1];
      },
      threads);

  return {cache.output, std::move(cache)};
}

/// Mean squared error over all 2N entries and its gradient w.r.t. pred.
template <typename T>
std::pair<double, Tensor<T>> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.dims != target.dims || pred.dims.size() != 2)
    throw std::invalid_argument("mse_loss: prediction/target shapes differ");
  const size_t total = pred.size();
  Tensor<T> grad(pred.dims);
  double acc = 0.0;
  for (size_t i = 0; i < total; ++i) {
    const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
    acc += d * d;
    grad.v[i] = static_cast<T>(2.0 * d / static_cast<double>(total));
  }
  return {acc / static_cast<double>(total), std::move(grad)};
}

/// Exact gradients for every trainable layer. Gradients still flow through
/// frozen layers but their own entries stay empty. The per-item gradients are
/// reduced in batch-index order, so results do not depend on thread count.
template <typename T>
ParameterSet<T> backward(const NetworkSpec& spec, const ParameterSet<T>& params,
                         const ForwardCache<T>& cache, const Tensor<T>& output_grad,
                         int threads = 0) {
  const auto shapes = propagate_shapes(spec);
  const int n = output_grad.dim(0);
  if (output_grad.dims.size() != 2 || output_grad.dim(1) != 2 ||
      cache.output.dims != output_grad.dims)
    throw std::invalid_argument("backward: output gradient shape mismatch");

  auto zero_like = [&](bool include_frozen) {
    ParameterSet<T> g;
    g.layers.resize(spec.layers.size());
    for (size_t i = 0; i < spec.layers.size(); ++i) {
      if (params.layers[i].empty()) continue;
      if (!include_frozen && !spec.layers[i].trainable) continue;
      g.layers[i].w_dims = params.layers[i].w_dims;
      g.layers[i].w.assign(params.layers[i].w.size(), T(0));
      g.layers[i].b.assign(params.layers[i].b.size(), T(0));
    }
    return g;
  };

  std::vector<ParameterSet<T>> item_grads(n);

  parallel_for(
      n,
      [&](long long item) {
        ParameterSet<T> g = zero_like(true);
        std::vector<T> gcur(output_grad.v.begin() + item * 2,
                            output_grad.v.begin() + item * 2 + 2);
        for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
          const LayerSpec& layer = spec.layers[li];
          const ActShape& in_s = shapes[li];
          const ActShape& out_s = shapes[li + 1];
          const T* in = cache.inputs[li].v.data() + item * static_cast<long long>(in_s.count());
          std::vector<T> gin(in_s.count(), T(0));
          switch (layer.kind) {
            case LayerKind::Conv3x3:
              detail::conv3x3_backward(in, gcur.data(), in_s.h, in_s.w, in_s.c,
                                       params.layers[li].w.data(), layer.features, gin.data(),
                                       g.layers[li].w.data(), g.layers[li].b.data());
              break;
            case LayerKind::Relu:
              for (size_t k = 0; k < gin.size(); ++k) gin[k] = in[k] > T(0) ? gcur[k] : T(0);
              break;
            case LayerKind::MaxPool2: {
              const int* argmax =
                  cache.pool_argmax[li].data() + item * static_cast<long long>(out_s.count());
              for (size_t k = 0; k < out_s.count(); ++k) gin[argmax[k]] += gcur[k];
              break;
            }
            case LayerKind::Flatten:
              gin = gcur;
              break;
            case LayerKind::Dense:
            case LayerKind::LinearOutput: {
              const int in_f = static_cast<int>(in_s.count());
              for (int o = 0; o < layer.features; ++o) {
                const double go = static_cast<double>(gcur[o]);
                g.layers[li].b[o] += static_cast<T>(go);
                const T* row = params.layers[li].w.data() + static_cast<size_t>(o) * in_f;
                T* grow = g.layers[li].w.data() + static_cast<size_t>(o) * in_f;
                for (int k = 0; k < in_f; ++k) {
                  grow[k] += static_cast<T>(go * in[k]);
                  gin[k] += static_cast<T>(go * row[k]);
                }
              }
              break;
            }
          }
          gcur = std::move(gin);
        }
        item_grads[item] = std::move(g);
      },
      threads);

  ParameterSet<T> total = zero_like(false);
  for (int item = 0; item < n; ++item) {
    for (size_t li = 0; li < spec.layers.size(); ++li) {
      if (total.layers[li].empty()) continue;
      const auto& src = item_grads[item].layers[li];
      auto& dst = total.layers[li];
      for (size_t k = 0; k < dst.w.size(); ++k) dst.w[k] += src.w[k];
      for (size_t k = 0; k < dst.b.size(); ++k) dst.b[k] += src.b[k];
    }
  }
  return total;
}

/// Chunked binary checkpoint ("CNNP"): format version, parameterized layer
/// count, then per layer the weight and bias tensors as little-endian f32.
void save_parameters(const ParameterSet<float>& params, const std::filesystem::path& path);
ParameterSet<float> load_parameters(const NetworkSpec& spec, const std::filesystem::path& path);

}  // namespace tdvs
