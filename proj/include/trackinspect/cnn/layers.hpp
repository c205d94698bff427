#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "trackinspect/cnn/tensor.hpp"
#include "trackinspect/rng.hpp"

namespace trackinspect::cnn {

// ---- convolution (valid padding, stride 1) --------------------------------

// in: (N,H,W,C), kernels: (F,k,k,C), bias: F  ->  (N,H-k+1,W-k+1,F)
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& in, const Tensor<T>& kernels,
                         const std::vector<T>& bias) {
  const int k = kernels.h;
  if (kernels.w != k) throw std::invalid_argument("conv2d: kernels must be square");
  if (kernels.c != in.c)
    throw std::invalid_argument("conv2d: kernel channels " + std::to_string(kernels.c) +
                                " do not match input channels " + std::to_string(in.c));
  if (static_cast<int>(bias.size()) != kernels.n)
    throw std::invalid_argument("conv2d: bias size does not match filter count");
  if (in.h < k || in.w < k)
    throw std::invalid_argument("conv2d: kernel " + std::to_string(k) + "x" + std::to_string(k) +
                                " larger than input " + in.shape_string());

  const int oh = in.h - k + 1, ow = in.w - k + 1;
  Tensor<T> out(in.n, oh, ow, kernels.n);
  const int span = k * in.c;  // one kernel row over (kx, ci), contiguous in both operands
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T* orow = &out.at(n, oy, ox, 0);
        for (int f = 0; f < kernels.n; ++f) {
          T acc = bias[static_cast<size_t>(f)];
          for (int ky = 0; ky < k; ++ky) {
            const T* irow = &in.v[((static_cast<size_t>(n) * in.h + oy + ky) * in.w + ox) * in.c];
            const T* krow = &kernels.v[((static_cast<size_t>(f) * k + ky) * k) * in.c];
            for (int i = 0; i < span; ++i) acc += irow[i] * krow[i];
          }
          orow[f] = acc;
        }
      }
  return out;
}

template <class T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernels;
  std::vector<T> bias;
};

template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& in, const Tensor<T>& kernels,
                             const Tensor<T>& upstream) {
  const int k = kernels.h;
  const int oh = in.h - k + 1, ow = in.w - k + 1;
  if (upstream.n != in.n || upstream.h != oh || upstream.w != ow || upstream.c != kernels.n)
    throw std::invalid_argument("conv2d_backward: upstream shape " + upstream.shape_string() +
                                " does not match forward output");

  ConvGrads<T> g{Tensor<T>(in.n, in.h, in.w, in.c), Tensor<T>(kernels.n, k, k, kernels.c),
                 std::vector<T>(static_cast<size_t>(kernels.n), T{})};
  const int span = k * in.c;
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const T* urow = &upstream.at(n, oy, ox, 0);
        for (int f = 0; f < kernels.n; ++f) {
          const T u = urow[f];
          if (u == T{}) continue;
          g.bias[static_cast<size_t>(f)] += u;
          for (int ky = 0; ky < k; ++ky) {
            const size_t ioff = ((static_cast<size_t>(n) * in.h + oy + ky) * in.w + ox) * in.c;
            const size_t koff = ((static_cast<size_t>(f) * k + ky) * k) * in.c;
            const T* irow = &in.v[ioff];
            const T* krow = &kernels.v[koff];
            T* igrow = &g.input.v[ioff];
            T* kgrow = &g.kernels.v[koff];
            for (int i = 0; i < span; ++i) {
              kgrow[i] += irow[i] * u;
              igrow[i] += krow[i] * u;
            }
          }
        }
      }
  return g;
}

// ---- 2x2/stride-2 max pooling ---------------------------------------------

template <class T>
struct PoolResult {
  Tensor<T> out;
  std::vector<int64_t> argmax;  // flat index into the input, per output element
};

template <class T>
PoolResult<T> maxpool_forward(const Tensor<T>& in) {
  if (in.h < 2 || in.w < 2)
    throw std::invalid_argument("maxpool: input " + in.shape_string() + " smaller than 2x2");
  const int oh = in.h / 2, ow = in.w / 2;
  PoolResult<T> r{Tensor<T>(in.n, oh, ow, in.c), {}};
  r.argmax.resize(r.out.size());
  size_t oi = 0;
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int ch = 0; ch < in.c; ++ch, ++oi) {
          T best{};
          int64_t best_idx = -1;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int64_t idx =
                  ((static_cast<int64_t>(n) * in.h + 2 * oy + dy) * in.w + 2 * ox + dx) * in.c +
                  ch;
              const T val = in.v[static_cast<size_t>(idx)];
              if (best_idx < 0 || val > best) {  // strict: first max wins ties
                best = val;
                best_idx = idx;
              }
            }
          r.out.v[oi] = best;
          r.argmax[oi] = best_idx;
        }
  return r;
}

template <class T>
Tensor<T> maxpool_backward(const std::vector<int64_t>& argmax, const Tensor<T>& upstream,
                           int in_n, int in_h, int in_w, int in_c) {
  Tensor<T> grad(in_n, in_h, in_w, in_c);
  if (argmax.size() != upstream.size())
    throw std::invalid_argument("maxpool_backward: argmax/upstream size mismatch");
  for (size_t i = 0; i < argmax.size(); ++i)
    grad.v[static_cast<size_t>(argmax[i])] += upstream.v[i];
  return grad;
}

// ---- relu -------------------------------------------------------------------

template <class T>
Tensor<T> relu_forward(const Tensor<T>& in) {
  Tensor<T> out = in;
  for (T& x : out.v) x = std::max(x, T{});
  return out;
}

// Subgradient choice at 0 is 0.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& in, const Tensor<T>& upstream) {
  if (!in.same_shape(upstream))
    throw std::invalid_argument("relu_backward: shape mismatch");
  Tensor<T> grad = upstream;
  for (size_t i = 0; i < grad.v.size(); ++i)
    if (!(in.v[i] > T{})) grad.v[i] = T{};
  return grad;
}

// ---- dense ------------------------------------------------------------------

// in: (N,1,1,F), weights: (U,1,1,F), bias: U  ->  (N,1,1,U)
template <class T>
Tensor<T> dense_forward(const Tensor<T>& in, const Tensor<T>& weights,
                        const std::vector<T>& bias) {
  if (in.h != 1 || in.w != 1)
    throw std::invalid_argument("dense: input must be flattened, got " + in.shape_string());
  if (weights.c != in.c)
    throw std::invalid_argument("dense: weight fan-in " + std::to_string(weights.c) +
                                " does not match input features " + std::to_string(in.c));
  if (static_cast<int>(bias.size()) != weights.n)
    throw std::invalid_argument("dense: bias size does not match unit count");

  Tensor<T> out(in.n, 1, 1, weights.n);
  for (int n = 0; n < in.n; ++n) {
    const T* irow = &in.at(n, 0, 0, 0);
    for (int u = 0; u < weights.n; ++u) {
      const T* wrow = &weights.at(u, 0, 0, 0);
      T acc = bias[static_cast<size_t>(u)];
      for (int i = 0; i < in.c; ++i) acc += irow[i] * wrow[i];
      out.at(n, 0, 0, u) = acc;
    }
  }
  return out;
}

template <class T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::vector<T> bias;
};

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& in, const Tensor<T>& weights,
                             const Tensor<T>& upstream) {
  if (upstream.n != in.n || upstream.c != weights.n)
    throw std::invalid_argument("dense_backward: upstream shape mismatch");
  DenseGrads<T> g{Tensor<T>(in.n, 1, 1, in.c), Tensor<T>(weights.n, 1, 1, weights.c),
                  std::vector<T>(static_cast<size_t>(weights.n), T{})};
  for (int n = 0; n < in.n; ++n) {
    const T* irow = &in.at(n, 0, 0, 0);
    T* girow = &g.input.at(n, 0, 0, 0);
    for (int u = 0; u < weights.n; ++u) {
      const T up = upstream.at(n, 0, 0, u);
      if (up == T{}) continue;
      g.bias[static_cast<size_t>(u)] += up;
      const T* wrow = &weights.at(u, 0, 0, 0);
      T* gwrow = &g.weights.at(u, 0, 0, 0);
      for (int i = 0; i < in.c; ++i) {
        gwrow[i] += irow[i] * up;
        girow[i] += wrow[i] * up;
      }
    }
  }
  return g;
}

// ---- flatten ----------------------------------------------------------------

template <class T>
Tensor<T> flatten_forward(const Tensor<T>& in) {
  Tensor<T> out(in.n, 1, 1, in.h * in.w * in.c);
  out.v = in.v;
  return out;
}

template <class T>
Tensor<T> flatten_backward(const Tensor<T>& upstream, int in_h, int in_w, int in_c) {
  Tensor<T> grad(upstream.n, in_h, in_w, in_c);
  grad.v = upstream.v;
  return grad;
}

// ---- softmax / cross-entropy ------------------------------------------------

// Row-wise softmax with the max subtracted before exponentiation.
template <class T>
Tensor<T> softmax(const Tensor<T>& in) {
  if (in.h != 1 || in.w != 1)
    throw std::invalid_argument("softmax: expected (n,1,1,k) logits, got " + in.shape_string());
  Tensor<T> out = in;
  for (int n = 0; n < in.n; ++n) {
    T* row = &out.at(n, 0, 0, 0);
    T m = row[0];
    for (int i = 1; i < in.c; ++i) m = std::max(m, row[i]);
    T sum{};
    for (int i = 0; i < in.c; ++i) {
      row[i] = std::exp(row[i] - m);
      sum += row[i];
    }
    for (int i = 0; i < in.c; ++i) row[i] /= sum;
  }
  return out;
}

// Mean negative log-likelihood over the batch; probabilities are clamped to
// [1e-12, 1] before the log.
template <class T>
double cross_entropy(const Tensor<T>& probs, const Tensor<T>& onehot) {
  if (!probs.same_shape(onehot))
    throw std::invalid_argument("cross_entropy: probs " + probs.shape_string() +
                                " vs labels " + onehot.shape_string());
  if (probs.n == 0) throw std::invalid_argument("cross_entropy: empty batch");
  double loss = 0.0;
  for (size_t i = 0; i < probs.v.size(); ++i) {
    const double y = static_cast<double>(onehot.v[i]);
    if (y == 0.0) continue;
    const double p = std::clamp(static_cast<double>(probs.v[i]), 1e-12, 1.0);
    loss -= y * std::log(p);
  }
  return loss / probs.n;
}

// ---- dropout ----------------------------------------------------------------

enum class PassMode { Train, Eval };

template <class T>
struct DropoutResult {
  Tensor<T> out;
  std::vector<uint8_t> kept;  // empty in Eval mode / at rate 0
};

// Inverted dropout: kept activations are scaled by 1/(1-rate) during
// training; evaluation is the identity.  The mask depends only on
// (seed, step, layer_index) so a fixed step replays the same mask.
template <class T>
DropoutResult<T> dropout_forward(const Tensor<T>& in, double rate, PassMode mode, uint64_t seed,
                                 uint64_t step, uint64_t layer_index) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout: rate must be in [0, 1)");
  DropoutResult<T> r{in, {}};
  if (mode == PassMode::Eval || rate == 0.0) return r;
  Rng rng(derive_seed(seed, {0x64726f70ull, step, layer_index}));
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  r.kept.resize(in.v.size());
  for (size_t i = 0; i < in.v.size(); ++i) {
    const bool keep = rng.uniform01() > rate;
    r.kept[i] = keep;
    r.out.v[i] = keep ? in.v[i] * scale : T{};
  }
  return r;
}

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& upstream, const std::vector<uint8_t>& kept,
                           double rate) {
  if (kept.empty()) return upstream;  // eval or rate 0
  if (kept.size() != upstream.v.size())
    throw std::invalid_argument("dropout_backward: mask size mismatch");
  Tensor<T> grad = upstream;
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (size_t i = 0; i < grad.v.size(); ++i) grad.v[i] = kept[i] ? grad.v[i] * scale : T{};
  return grad;
}

}  // namespace trackinspect::cnn
