#include "trackinspect/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace trackinspect {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
  throw std::invalid_argument("config: " + key + " = '" + value + "': " + why);
}

int64_t to_int(const std::string& key, const std::string& value, int64_t lo, int64_t hi) {
  int64_t v = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || p != end) bad_value(key, value, "expected an integer");
  if (v < lo || v > hi)
    bad_value(key, value,
              "outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

uint64_t to_u64(const std::string& key, const std::string& value) {
  uint64_t v = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || p != end) bad_value(key, value, "expected an unsigned integer");
  return v;
}

double to_double(const std::string& key, const std::string& value, double lo, double hi) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value, "expected a number");
    if (!(v >= lo && v <= hi))
      bad_value(key, value,
                "outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value, "expected a number");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "expected true/false");
}

std::set<ComponentKind> to_kinds(const std::string& key, const std::string& value) {
  std::set<ComponentKind> kinds;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "block") kinds.insert(ComponentKind::Block);
    else if (item == "screw") kinds.insert(ComponentKind::Screw);
    else if (item == "washer") kinds.insert(ComponentKind::Washer);
    else if (item == "connector") kinds.insert(ComponentKind::Connector);
    else bad_value(key, value, "unknown component kind '" + item + "'");
  }
  if (kinds.empty()) bad_value(key, value, "needs at least one kind");
  return kinds;
}

std::string kinds_to_string(const std::set<ComponentKind>& kinds) {
  std::string out;
  for (ComponentKind k : kinds) {
    if (!out.empty()) out += ',';
    switch (k) {
      case ComponentKind::Block: out += "block"; break;
      case ComponentKind::Screw: out += "screw"; break;
      case ComponentKind::Washer: out += "washer"; break;
      case ComponentKind::Connector: out += "connector"; break;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ConfigValues parse_config_text(const std::string& text) {
  ConfigValues values;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    values[key] = value;
  }
  return values;
}

ConfigValues load_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_config(AppConfig& c, const ConfigValues& values) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"scene.width", [&](auto& k, auto& v) { c.scene.width = (int)to_int(k, v, 32, 4096); }},
      {"scene.height", [&](auto& k, auto& v) { c.scene.height = (int)to_int(k, v, 32, 4096); }},
      {"scene.rail_thickness",
       [&](auto& k, auto& v) { c.scene.rail_thickness = (int)to_int(k, v, 1, 64); }},
      {"scene.tie_width", [&](auto& k, auto& v) { c.scene.tie_width = (int)to_int(k, v, 2, 64); }},
      {"scene.screw_radius",
       [&](auto& k, auto& v) { c.scene.screw_radius = (int)to_int(k, v, 1, 32); }},
      {"scene.washer_outer_radius",
       [&](auto& k, auto& v) { c.scene.washer_outer_radius = (int)to_int(k, v, 2, 32); }},
      {"scene.connector_size",
       [&](auto& k, auto& v) { c.scene.connector_size = (int)to_int(k, v, 2, 64); }},
      {"scene.background_noise_sigma",
       [&](auto& k, auto& v) { c.scene.background_noise_sigma = to_double(k, v, 0.0, 64.0); }},
      {"scene.jitter_translation_max",
       [&](auto& k, auto& v) { c.scene.jitter_translation_max = (int)to_int(k, v, 0, 16); }},
      {"scene.jitter_brightness_max",
       [&](auto& k, auto& v) { c.scene.jitter_brightness_max = (int)to_int(k, v, 0, 64); }},
      {"scene.sensor_speckle_fraction",
       [&](auto& k, auto& v) { c.scene.sensor_speckle_fraction = to_double(k, v, 0.0, 1.0); }},
      {"scene.master_seed", [&](auto& k, auto& v) { c.scene.master_seed = to_u64(k, v); }},

      {"pipeline.diff_threshold",
       [&](auto& k, auto& v) { c.pipeline.diff_threshold = (int)to_int(k, v, 1, 254); }},
      {"pipeline.min_blob_area",
       [&](auto& k, auto& v) { c.pipeline.min_blob_area = (int)to_int(k, v, 1, 1 << 20); }},
      {"pipeline.registration_window",
       [&](auto& k, auto& v) { c.pipeline.registration_window = (int)to_int(k, v, 0, 64); }},
      {"pipeline.median_radius",
       [&](auto& k, auto& v) { c.pipeline.median_radius = (int)to_int(k, v, 0, 8); }},
      {"pipeline.morph_open_radius",
       [&](auto& k, auto& v) { c.pipeline.morph_open_radius = (int)to_int(k, v, 0, 8); }},
      {"pipeline.max_mapping_distance",
       [&](auto& k, auto& v) { c.pipeline.max_mapping_distance = to_double(k, v, 0.0, 1e6); }},

      {"dataset.kinds", [&](auto& k, auto& v) { c.dataset.defect_kinds = to_kinds(k, v); }},
      {"dataset.train_count",
       [&](auto& k, auto& v) { c.dataset.train_count = (int)to_int(k, v, 1, 1 << 20); }},
      {"dataset.valid_count",
       [&](auto& k, auto& v) { c.dataset.valid_count = (int)to_int(k, v, 1, 1 << 20); }},
      {"dataset.test_count",
       [&](auto& k, auto& v) { c.dataset.test_count = (int)to_int(k, v, 0, 1 << 20); }},
      {"dataset.class_balance",
       [&](auto& k, auto& v) { c.dataset.class_balance = to_double(k, v, 0.0, 1.0); }},
      {"dataset.image_size",
       [&](auto& k, auto& v) { c.dataset.image_size = (int)to_int(k, v, 8, 1024); }},
      {"dataset.seed", [&](auto& k, auto& v) { c.dataset.seed = to_u64(k, v); }},

      {"train.epochs", [&](auto& k, auto& v) { c.train.epochs = (int)to_int(k, v, 0, 100000); }},
      {"train.batch_size",
       [&](auto& k, auto& v) { c.train.batch_size = (int)to_int(k, v, 1, 4096); }},
      {"train.steps_per_epoch",
       [&](auto& k, auto& v) { c.train.steps_per_epoch = (int)to_int(k, v, 0, 1 << 20); }},
      {"train.validation_steps",
       [&](auto& k, auto& v) { c.train.validation_steps = (int)to_int(k, v, 0, 1 << 20); }},
      {"train.learning_rate",
       [&](auto& k, auto& v) { c.train.learning_rate = to_double(k, v, 1e-12, 1.0); }},
      {"train.beta1", [&](auto& k, auto& v) { c.train.beta1 = to_double(k, v, 0.0, 0.9999999); }},
      {"train.beta2", [&](auto& k, auto& v) { c.train.beta2 = to_double(k, v, 0.0, 0.9999999); }},
      {"train.epsilon", [&](auto& k, auto& v) { c.train.epsilon = to_double(k, v, 0.0, 1.0); }},
      {"train.shuffle", [&](auto& k, auto& v) { c.train.shuffle = to_bool(k, v); }},
      {"train.seed", [&](auto& k, auto& v) { c.train.seed = to_u64(k, v); }},
      {"train.augment", [&](auto& k, auto& v) { c.train.augment = to_bool(k, v); }},
      {"train.augment_flip_probability",
       [&](auto& k, auto& v) { c.train.augment_config.flip_probability = to_double(k, v, 0.0, 1.0); }},
      {"train.augment_translate_max_frac",
       [&](auto& k, auto& v) {
         c.train.augment_config.translate_max_frac = to_double(k, v, 0.0, 0.10);
       }},
      {"train.augment_brightness_max_frac",
       [&](auto& k, auto& v) {
         c.train.augment_config.brightness_max_frac = to_double(k, v, 0.0, 0.10);
       }},
      {"train.dropout", [&](auto& k, auto& v) { c.train_dropout = to_double(k, v, 0.0, 0.99); }},
  };

  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(key, value);
  }
}

std::string config_echo(const AppConfig& c) {
  std::ostringstream os;
  os << "scene.width = " << c.scene.width << '\n'
     << "scene.height = " << c.scene.height << '\n'
     << "scene.rail_thickness = " << c.scene.rail_thickness << '\n'
     << "scene.tie_width = " << c.scene.tie_width << '\n'
     << "scene.screw_radius = " << c.scene.screw_radius << '\n'
     << "scene.washer_outer_radius = " << c.scene.washer_outer_radius << '\n'
     << "scene.connector_size = " << c.scene.connector_size << '\n'
     << "scene.background_noise_sigma = " << fmt(c.scene.background_noise_sigma) << '\n'
     << "scene.jitter_translation_max = " << c.scene.jitter_translation_max << '\n'
     << "scene.jitter_brightness_max = " << c.scene.jitter_brightness_max << '\n'
     << "scene.sensor_speckle_fraction = " << fmt(c.scene.sensor_speckle_fraction) << '\n'
     << "scene.master_seed = " << c.scene.master_seed << '\n'
     << "pipeline.diff_threshold = " << c.pipeline.diff_threshold << '\n'
     << "pipeline.min_blob_area = " << c.pipeline.min_blob_area << '\n'
     << "pipeline.registration_window = " << c.pipeline.registration_window << '\n'
     << "pipeline.median_radius = " << c.pipeline.median_radius << '\n'
     << "pipeline.morph_open_radius = " << c.pipeline.morph_open_radius << '\n'
     << "pipeline.max_mapping_distance = " << fmt(c.pipeline.max_mapping_distance) << '\n'
     << "dataset.kinds = " << kinds_to_string(c.dataset.defect_kinds) << '\n'
     << "dataset.train_count = " << c.dataset.train_count << '\n'
     << "dataset.valid_count = " << c.dataset.valid_count << '\n'
     << "dataset.test_count = " << c.dataset.test_count << '\n'
     << "dataset.class_balance = " << fmt(c.dataset.class_balance) << '\n'
     << "dataset.image_size = " << c.dataset.image_size << '\n'
     << "dataset.seed = " << c.dataset.seed << '\n'
     << "train.epochs = " << c.train.epochs << '\n'
     << "train.batch_size = " << c.train.batch_size << '\n'
     << "train.steps_per_epoch = " << c.train.steps_per_epoch << '\n'
     << "train.validation_steps = " << c.train.validation_steps << '\n'
     << "train.learning_rate = " << fmt(c.train.learning_rate) << '\n'
     << "train.beta1 = " << fmt(c.train.beta1) << '\n'
     << "train.beta2 = " << fmt(c.train.beta2) << '\n'
     << "train.epsilon = " << fmt(c.train.epsilon) << '\n'
     << "train.shuffle = " << (c.train.shuffle ? "true" : "false") << '\n'
     << "train.seed = " << c.train.seed << '\n'
     << "train.augment = " << (c.train.augment ? "true" : "false") << '\n'
     << "train.augment_flip_probability = " << fmt(c.train.augment_config.flip_probability)
     << '\n'
     << "train.augment_translate_max_frac = " << fmt(c.train.augment_config.translate_max_frac)
     << '\n'
     << "train.augment_brightness_max_frac = "
     << fmt(c.train.augment_config.brightness_max_frac) << '\n'
     << "train.dropout = " << fmt(c.train_dropout) << '\n';
  return os.str();
}

}  // namespace trackinspect
