#pragma once
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace trackinspect::cnn {

// Dense rank-4 tensor in NHWC order.  Vectors (dense activations, logits)
// are carried as (n, 1, 1, c).
template <class T>
struct Tensor {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_), v(static_cast<size_t>(n_) * h_ * w_ * c_, T{}) {
    if (n_ < 0 || h_ < 0 || w_ < 0 || c_ < 0)
      throw std::invalid_argument("tensor dims must be non-negative");
  }

  size_t size() const { return v.size(); }

  T& at(int in, int iy, int ix, int ic) {
    return v[((static_cast<size_t>(in) * h + iy) * w + ix) * c + ic];
  }
  const T& at(int in, int iy, int ix, int ic) const {
    return v[((static_cast<size_t>(in) * h + iy) * w + ix) * c + ic];
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }
  std::string shape_string() const {
    return "(" + std::to_string(n) + ", " + std::to_string(h) + ", " + std::to_string(w) +
           ", " + std::to_string(c) + ")";
  }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace trackinspect::cnn
