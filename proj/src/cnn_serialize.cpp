#include "trackinspect/cnn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace trackinspect::cnn {
namespace {

constexpr char kMagic[4] = {'R', 'C', 'N', 'N'};
constexpr uint16_t kVersion = 1;

void put_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <class U>
void put_le(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char buf[sizeof(U)];
  for (size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
  put_bytes(os, buf, sizeof(U));
}

void put_i32(std::ostream& os, int32_t v) { put_le(os, static_cast<uint32_t>(v)); }
void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<uint64_t>(v)); }

void put_scalar(std::ostream& os, float v) { put_le(os, std::bit_cast<uint32_t>(v)); }
void put_scalar(std::ostream& os, double v) { put_le(os, std::bit_cast<uint64_t>(v)); }

struct Reader {
  std::ifstream f;
  std::string path;

  void get_bytes(void* p, size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(f.gcount()) != n)
      throw std::runtime_error(path + ": truncated model file");
  }

  template <class U>
  U get_le() {
    static_assert(std::is_unsigned_v<U>);
    unsigned char buf[sizeof(U)];
    get_bytes(buf, sizeof(U));
    U v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }

  int32_t get_i32() { return static_cast<int32_t>(get_le<uint32_t>()); }
  double get_f64() { return std::bit_cast<double>(get_le<uint64_t>()); }
  float get_f32() { return std::bit_cast<float>(get_le<uint32_t>()); }
};

template <class T>
void write_model(const std::string& path, const Model<T>& m, uint8_t precision) {
  if (m.params.size() != m.layers.size())
    throw std::invalid_argument("save_model: model has no initialized parameters");
  plan_shapes(m.input_h, m.input_w, m.input_c, m.layers);  // reject malformed stacks

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  put_bytes(f, kMagic, 4);
  put_le<uint16_t>(f, kVersion);
  put_le<uint8_t>(f, precision);
  put_i32(f, m.input_h);
  put_i32(f, m.input_w);
  put_i32(f, m.input_c);
  put_le<uint32_t>(f, static_cast<uint32_t>(m.layers.size()));
  for (const LayerSpec& L : m.layers) {
    put_le<uint8_t>(f, static_cast<uint8_t>(L.kind));
    put_i32(f, L.filters);
    put_i32(f, L.kernel);
    put_i32(f, L.units);
    put_f64(f, L.rate);
  }
  for (const LayerParams<T>& p : m.params) {
    if (!p.has_params()) continue;
    put_i32(f, p.weights.n);
    put_i32(f, p.weights.h);
    put_i32(f, p.weights.w);
    put_i32(f, p.weights.c);
    for (T w : p.weights.v) put_scalar(f, w);
    put_i32(f, static_cast<int32_t>(p.bias.size()));
    for (T b : p.bias) put_scalar(f, b);
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

template <class T>
Model<T> read_model(Reader& r, int32_t ih, int32_t iw, int32_t ic,
                    std::vector<LayerSpec> layers) {
  Model<T> m;
  m.input_h = ih;
  m.input_w = iw;
  m.input_c = ic;
  m.layers = std::move(layers);
  const auto shapes = plan_shapes(m.input_h, m.input_w, m.input_c, m.layers);

  m.params.assign(m.layers.size(), LayerParams<T>{});
  Shape3 s{m.input_h, m.input_w, m.input_c};
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& L = m.layers[i];
    if (L.kind == LayerKind::Conv || L.kind == LayerKind::Dense) {
      const int32_t wn = r.get_i32(), wh = r.get_i32(), ww = r.get_i32(), wc = r.get_i32();
      int en, eh, ew, ec;
      if (L.kind == LayerKind::Conv) {
        en = L.filters; eh = L.kernel; ew = L.kernel; ec = s.c;
      } else {
        en = L.units; eh = 1; ew = 1; ec = s.c;
      }
      if (wn != en || wh != eh || ww != ew || wc != ec)
        throw std::runtime_error(r.path + ": layer " + std::to_string(i) +
                                 " weight shape does not match its layer table entry");
      Tensor<T> w(wn, wh, ww, wc);
      for (T& x : w.v) {
        if constexpr (std::is_same_v<T, float>) x = r.get_f32();
        else x = r.get_f64();
      }
      const int32_t bn = r.get_i32();
      if (bn != wn)
        throw std::runtime_error(r.path + ": layer " + std::to_string(i) + " bad bias count");
      std::vector<T> b(static_cast<size_t>(bn));
      for (T& x : b) {
        if constexpr (std::is_same_v<T, float>) x = r.get_f32();
        else x = r.get_f64();
      }
      m.params[i].weights = std::move(w);
      m.params[i].bias = std::move(b);
    }
    s = shapes[i];
  }
  char extra;
  r.f.read(&extra, 1);
  if (r.f.gcount() != 0)
    throw std::runtime_error(r.path + ": trailing bytes after model payload");
  return m;
}

}  // namespace

void save_model(const std::string& path, const Model<float>& m) { write_model(path, m, 0); }
void save_model(const std::string& path, const Model<double>& m) { write_model(path, m, 1); }

LoadedModel load_model(const std::string& path) {
  Reader r;
  r.path = path;
  r.f.open(path, std::ios::binary);
  if (!r.f) throw std::runtime_error("cannot open " + path);

  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a model file (bad magic)");
  const uint16_t version = r.get_le<uint16_t>();
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
  const uint8_t precision = r.get_le<uint8_t>();
  if (precision > 1)
    throw std::runtime_error(path + ": unknown precision flag " + std::to_string(precision));
  const int32_t ih = r.get_i32(), iw = r.get_i32(), ic = r.get_i32();
  if (ih <= 0 || iw <= 0 || ic <= 0 || ih > 1 << 20 || iw > 1 << 20 || ic > 1 << 20)
    throw std::runtime_error(path + ": implausible input shape");
  const uint32_t layer_count = r.get_le<uint32_t>();
  if (layer_count > 1024) throw std::runtime_error(path + ": implausible layer count");

  std::vector<LayerSpec> layers(layer_count);
  for (LayerSpec& L : layers) {
    const uint8_t kind = r.get_le<uint8_t>();
    if (kind > static_cast<uint8_t>(LayerKind::Softmax))
      throw std::runtime_error(path + ": unknown layer kind " + std::to_string(kind));
    L.kind = static_cast<LayerKind>(kind);
    L.filters = r.get_i32();
    L.kernel = r.get_i32();
    L.units = r.get_i32();
    L.rate = r.get_f64();
    if (L.filters < 0 || L.kernel < 0 || L.units < 0 || L.filters > 1 << 16 ||
        L.kernel > 1 << 12 || L.units > 1 << 20)
      throw std::runtime_error(path + ": implausible layer dimensions");
    if (!std::isfinite(L.rate) || L.rate < 0.0 || L.rate >= 1.0)
      throw std::runtime_error(path + ": implausible dropout rate");
  }

  try {
    if (precision == 0) return read_model<float>(r, ih, iw, ic, std::move(layers));
    return read_model<double>(r, ih, iw, ic, std::move(layers));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": invalid layer stack: " + e.what());
  }
}

}  // namespace trackinspect::cnn
