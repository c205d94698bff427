#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "trackinspect/cnn/model.hpp"

namespace trackinspect::cnn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates, shaped like the model parameters.
template <class T>
struct AdamState {
  std::vector<LayerParams<T>> m1;
  std::vector<LayerParams<T>> m2;
  int64_t t = 0;

  explicit AdamState(const Model<T>& model) {
    m1.resize(model.params.size());
    m2.resize(model.params.size());
    for (size_t i = 0; i < model.params.size(); ++i) {
      const LayerParams<T>& p = model.params[i];
      if (!p.has_params()) continue;
      m1[i].weights = Tensor<T>(p.weights.n, p.weights.h, p.weights.w, p.weights.c);
      m1[i].bias.assign(p.bias.size(), T{});
      m2[i].weights = Tensor<T>(p.weights.n, p.weights.h, p.weights.w, p.weights.c);
      m2[i].bias.assign(p.bias.size(), T{});
    }
  }
};

namespace detail {
template <class T>
void adam_update(T* p, const T* g, T* m1, T* m2, size_t count, const AdamConfig& cfg,
                 double bc1, double bc2) {
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.learning_rate), eps = static_cast<T>(cfg.epsilon);
  const T ibc1 = static_cast<T>(1.0 / bc1), ibc2 = static_cast<T>(1.0 / bc2);
  for (size_t i = 0; i < count; ++i) {
    m1[i] = b1 * m1[i] + (T{1} - b1) * g[i];
    m2[i] = b2 * m2[i] + (T{1} - b2) * g[i] * g[i];
    const T mhat = m1[i] * ibc1;
    const T vhat = m2[i] * ibc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}
}  // namespace detail

// One bias-corrected update.  When `trainable` is given, layers flagged 0 are
// left untouched (parameters and moments both), so frozen weights stay
// bit-identical across any number of steps.
template <class T>
void adam_step(Model<T>& model, const std::vector<LayerParams<T>>& grads, AdamState<T>& state,
               const AdamConfig& cfg, const std::vector<uint8_t>* trainable = nullptr) {
  if (grads.size() != model.params.size())
    throw std::invalid_argument("adam_step: gradient count does not match model");
  if (trainable && trainable->size() != model.params.size())
    throw std::invalid_argument("adam_step: trainable mask size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < model.params.size(); ++i) {
    LayerParams<T>& p = model.params[i];
    if (!p.has_params()) continue;
    if (trainable && !(*trainable)[i]) continue;
    const LayerParams<T>& g = grads[i];
    if (!g.weights.same_shape(p.weights) || g.bias.size() != p.bias.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " +
                                  std::to_string(i));
    detail::adam_update(p.weights.v.data(), g.weights.v.data(), state.m1[i].weights.v.data(),
                        state.m2[i].weights.v.data(), p.weights.size(), cfg, bc1, bc2);
    detail::adam_update(p.bias.data(), g.bias.data(), state.m1[i].bias.data(),
                        state.m2[i].bias.data(), p.bias.size(), cfg, bc1, bc2);
  }
}

}  // namespace trackinspect::cnn
