#pragma once
#include <string>
#include <vector>

#include "trackinspect/cnn/layers.hpp"
#include "trackinspect/cnn/tensor.hpp"
#include "trackinspect/rng.hpp"

namespace trackinspect::cnn {

enum class LayerKind : uint8_t {
  Conv = 0,
  Relu = 1,
  MaxPool = 2,
  Flatten = 3,
  Dropout = 4,
  Dense = 5,
  Softmax = 6,
};

inline const char* layer_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind{};
  int filters = 0;   // conv
  int kernel = 0;    // conv
  int units = 0;     // dense
  double rate = 0.0; // dropout

  bool operator==(const LayerSpec&) const = default;
};

template <class T>
struct LayerParams {
  Tensor<T> weights;    // conv: (F,k,k,Cin); dense: (U,1,1,Fin); else empty
  std::vector<T> bias;

  bool has_params() const { return !bias.empty(); }
};

struct Shape3 {
  int h = 0, w = 0, c = 0;
};

template <class T>
struct Model {
  using value_type = T;

  int input_h = 0, input_w = 0, input_c = 0;
  std::vector<LayerSpec> layers;
  std::vector<LayerParams<T>> params;  // one entry per layer (empty for non-parametric)
};

// Walks the layer stack from the input shape, validating that every layer is
// applicable; returns the shape after each layer.
inline std::vector<Shape3> plan_shapes(int input_h, int input_w, int input_c,
                                       const std::vector<LayerSpec>& layers) {
  if (input_h <= 0 || input_w <= 0 || input_c <= 0)
    throw std::invalid_argument("model: input shape must be positive");
  std::vector<Shape3> shapes;
  shapes.reserve(layers.size());
  Shape3 s{input_h, input_w, input_c};
  bool flat = false;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& L = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + layer_name(L.kind) + ")";
    switch (L.kind) {
      case LayerKind::Conv:
        if (flat) throw std::invalid_argument(where + ": conv after flatten");
        if (L.filters <= 0 || L.kernel <= 0)
          throw std::invalid_argument(where + ": filters and kernel must be positive");
        if (s.h < L.kernel || s.w < L.kernel)
          throw std::invalid_argument(where + ": kernel " + std::to_string(L.kernel) +
                                      " exceeds input " + std::to_string(s.h) + "x" +
                                      std::to_string(s.w));
        s = {s.h - L.kernel + 1, s.w - L.kernel + 1, L.filters};
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool:
        if (flat) throw std::invalid_argument(where + ": pool after flatten");
        if (s.h < 2 || s.w < 2) throw std::invalid_argument(where + ": input smaller than 2x2");
        s = {s.h / 2, s.w / 2, s.c};
        break;
      case LayerKind::Flatten:
        s = {1, 1, s.h * s.w * s.c};
        flat = true;
        break;
      case LayerKind::Dropout:
        if (L.rate < 0.0 || L.rate >= 1.0)
          throw std::invalid_argument(where + ": rate must be in [0, 1)");
        break;
      case LayerKind::Dense:
        if (!flat && (s.h != 1 || s.w != 1))
          throw std::invalid_argument(where + ": dense requires flattened input");
        if (L.units <= 0) throw std::invalid_argument(where + ": units must be positive");
        s = {1, 1, L.units};
        flat = true;
        break;
      case LayerKind::Softmax:
        if (s.h != 1 || s.w != 1)
          throw std::invalid_argument(where + ": softmax requires flattened input");
        break;
    }
    shapes.push_back(s);
  }
  return shapes;
}

// Weights ~ N(0, sqrt(2/fan_in)), biases zero.  Drawing is sequential in
// layer order from a single stream, so a seed pins every parameter.
template <class T>
void init_params(Model<T>& m, uint64_t seed) {
  const auto shapes = plan_shapes(m.input_h, m.input_w, m.input_c, m.layers);
  m.params.assign(m.layers.size(), LayerParams<T>{});
  Rng rng(derive_seed(seed, {0x696e6974ull}));
  Shape3 s{m.input_h, m.input_w, m.input_c};
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& L = m.layers[i];
    if (L.kind == LayerKind::Conv) {
      const int fan_in = L.kernel * L.kernel * s.c;
      const double sigma = std::sqrt(2.0 / fan_in);
      LayerParams<T>& p = m.params[i];
      p.weights = Tensor<T>(L.filters, L.kernel, L.kernel, s.c);
      for (T& w : p.weights.v) w = static_cast<T>(rng.normal(0.0, sigma));
      p.bias.assign(static_cast<size_t>(L.filters), T{});
    } else if (L.kind == LayerKind::Dense) {
      const int fan_in = s.c;
      const double sigma = std::sqrt(2.0 / fan_in);
      LayerParams<T>& p = m.params[i];
      p.weights = Tensor<T>(L.units, 1, 1, fan_in);
      for (T& w : p.weights.v) w = static_cast<T>(rng.normal(0.0, sigma));
      p.bias.assign(static_cast<size_t>(L.units), T{});
    }
    s = shapes[i];
  }
}

template <class T>
Model<T> make_model(int input_h, int input_w, int input_c, std::vector<LayerSpec> layers,
                    uint64_t seed) {
  Model<T> m;
  m.input_h = input_h;
  m.input_w = input_w;
  m.input_c = input_c;
  m.layers = std::move(layers);
  init_params(m, seed);
  return m;
}

// Conv3x3(8) -> ReLU -> Pool -> Conv3x3(16) -> ReLU -> Pool
//   -> Conv3x3(32) -> ReLU -> Pool -> Flatten [-> Dropout] -> Dense(2) -> Softmax
template <class T>
Model<T> make_default_model(int input_size, uint64_t seed, double dropout_rate = 0.0,
                            int classes = 2) {
  std::vector<LayerSpec> layers;
  for (int f : {8, 16, 32}) {
    layers.push_back({.kind = LayerKind::Conv, .filters = f, .kernel = 3});
    layers.push_back({.kind = LayerKind::Relu});
    layers.push_back({.kind = LayerKind::MaxPool});
  }
  layers.push_back({.kind = LayerKind::Flatten});
  if (dropout_rate > 0.0) layers.push_back({.kind = LayerKind::Dropout, .rate = dropout_rate});
  layers.push_back({.kind = LayerKind::Dense, .units = classes});
  layers.push_back({.kind = LayerKind::Softmax});
  return make_model<T>(input_size, input_size, 1, std::move(layers), seed);
}

template <class T>
size_t parameter_count(const Model<T>& m) {
  size_t total = 0;
  for (const auto& p : m.params) total += p.weights.size() + p.bias.size();
  return total;
}

// Everything the backward pass needs from the forward pass.
template <class T>
struct ForwardTrace {
  std::vector<Tensor<T>> acts;                 // acts[0] = input, acts[i+1] = layer i output
  std::vector<std::vector<int64_t>> argmax;    // per layer; empty unless maxpool
  std::vector<std::vector<uint8_t>> masks;     // per layer; empty unless train-mode dropout
};

template <class T>
Tensor<T> forward(const Model<T>& m, const Tensor<T>& input, PassMode mode,
                  uint64_t dropout_seed = 0, uint64_t step = 0,
                  ForwardTrace<T>* trace = nullptr) {
  if (input.h != m.input_h || input.w != m.input_w || input.c != m.input_c)
    throw std::invalid_argument("forward: input " + input.shape_string() +
                                " does not match model input " + std::to_string(m.input_h) +
                                "x" + std::to_string(m.input_w) + "x" +
                                std::to_string(m.input_c));
  if (m.params.size() != m.layers.size())
    throw std::invalid_argument("forward: model has no initialized parameters");

  if (trace) {
    trace->acts.clear();
    trace->argmax.assign(m.layers.size(), {});
    trace->masks.assign(m.layers.size(), {});
    trace->acts.reserve(m.layers.size() + 1);
    trace->acts.push_back(input);
  }
  Tensor<T> x = input;
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& L = m.layers[i];
    switch (L.kind) {
      case LayerKind::Conv:
        x = conv2d_forward(x, m.params[i].weights, m.params[i].bias);
        break;
      case LayerKind::Relu:
        x = relu_forward(x);
        break;
      case LayerKind::MaxPool: {
        auto r = maxpool_forward(x);
        if (trace) trace->argmax[i] = std::move(r.argmax);
        x = std::move(r.out);
        break;
      }
      case LayerKind::Flatten:
        x = flatten_forward(x);
        break;
      case LayerKind::Dropout: {
        auto r = dropout_forward(x, L.rate, mode, dropout_seed, step, static_cast<uint64_t>(i));
        if (trace) trace->masks[i] = std::move(r.kept);
        x = std::move(r.out);
        break;
      }
      case LayerKind::Dense:
        x = dense_forward(x, m.params[i].weights, m.params[i].bias);
        break;
      case LayerKind::Softmax:
        x = softmax(x);
        break;
    }
    if (!x.all_finite())
      throw std::runtime_error("non-finite activations after layer " + std::to_string(i) + " (" +
                               layer_name(L.kind) + ")");
    if (trace) trace->acts.push_back(x);
  }
  return x;
}

// Gradients of mean cross-entropy w.r.t. every parameter.  The last layer
// must be softmax: the pass starts from the fused softmax/cross-entropy
// gradient (p - y)/N and skips the softmax jacobian.
template <class T>
std::vector<LayerParams<T>> backward(const Model<T>& m, const ForwardTrace<T>& trace,
                                     const Tensor<T>& onehot) {
  if (m.layers.empty() || m.layers.back().kind != LayerKind::Softmax)
    throw std::invalid_argument("backward: model must end with softmax");
  if (trace.acts.size() != m.layers.size() + 1)
    throw std::invalid_argument("backward: trace does not match model");
  const Tensor<T>& probs = trace.acts.back();
  if (!probs.same_shape(onehot))
    throw std::invalid_argument("backward: labels " + onehot.shape_string() +
                                " do not match output " + probs.shape_string());

  std::vector<LayerParams<T>> grads(m.layers.size());
  Tensor<T> g = probs;
  const T invn = static_cast<T>(1.0 / probs.n);
  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] = (g.v[i] - onehot.v[i]) * invn;

  for (size_t i = m.layers.size(); i-- > 0;) {
    const LayerSpec& L = m.layers[i];
    const Tensor<T>& in = trace.acts[i];
    switch (L.kind) {
      case LayerKind::Softmax:
        if (i + 1 != m.layers.size())
          throw std::invalid_argument("backward: interior softmax unsupported");
        break;  // fused with cross-entropy above
      case LayerKind::Dense: {
        auto dg = dense_backward(in, m.params[i].weights, g);
        grads[i].weights = std::move(dg.weights);
        grads[i].bias = std::move(dg.bias);
        g = std::move(dg.input);
        break;
      }
      case LayerKind::Dropout:
        g = dropout_backward(g, trace.masks[i], L.rate);
        break;
      case LayerKind::Flatten:
        g = flatten_backward(g, in.h, in.w, in.c);
        break;
      case LayerKind::MaxPool:
        g = maxpool_backward(trace.argmax[i], g, in.n, in.h, in.w, in.c);
        break;
      case LayerKind::Relu:
        g = relu_backward(in, g);
        break;
      case LayerKind::Conv: {
        auto cg = conv2d_backward(in, m.params[i].weights, g);
        grads[i].weights = std::move(cg.kernels);
        grads[i].bias = std::move(cg.bias);
        g = std::move(cg.input);
        break;
      }
    }
  }
  return grads;
}

// Argmax per sample; ties resolve to the higher class index, so an exact
// 50/50 on {safe, defective} reads as defective.
template <class T>
std::vector<int> predict_classes(const Model<T>& m, const Tensor<T>& input) {
  const Tensor<T> probs = forward(m, input, PassMode::Eval);
  std::vector<int> out(static_cast<size_t>(probs.n));
  for (int n = 0; n < probs.n; ++n) {
    int best = 0;
    for (int k = 1; k < probs.c; ++k)
      if (probs.at(n, 0, 0, k) >= probs.at(n, 0, 0, best)) best = k;
    out[static_cast<size_t>(n)] = best;
  }
  return out;
}

}  // namespace trackinspect::cnn
