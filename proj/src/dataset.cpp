#include "trackinspect/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "trackinspect/rng.hpp"

namespace trackinspect {

namespace {

constexpr uint64_t kDatasetTag = 0x64617461ull;

std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

DatasetManifest build_cnn_dataset(const std::string& out_dir, const DatasetSpec& spec,
                                  SceneConfig scene) {
  if (spec.defect_kinds.empty())
    throw std::invalid_argument("dataset needs at least one defect kind");
  if (spec.train_count <= 0 || spec.valid_count <= 0 || spec.test_count <= 0)
    throw std::invalid_argument("dataset split counts must be positive");
  if (spec.class_balance <= 0.0 || spec.class_balance >= 1.0)
    throw std::invalid_argument("class balance must be inside (0, 1)");
  if (spec.image_size < 8)
    throw std::invalid_argument("dataset image size must be at least 8");

  scene.master_seed = derive_seed(spec.seed, {kDatasetTag});
  const TrackGeometry geometry = standard_geometry(scene);

  std::vector<ComponentId> pool;
  for (const auto& id : inventory())
    if (spec.defect_kinds.contains(id.kind)) pool.push_back(id);

  DatasetManifest manifest;
  const std::pair<const char*, int> splits[] = {
      {"train", spec.train_count}, {"valid", spec.valid_count}, {"test", spec.test_count}};
  int split_index = 0;
  for (const auto& [split, count] : splits) {
    const int safe_count = static_cast<int>(std::lround(count * spec.class_balance));
    std::filesystem::create_directories(out_dir + "/" + std::string(split) + "/safe");
    std::filesystem::create_directories(out_dir + "/" + std::string(split) + "/defective");
    for (int i = 0; i < count; ++i) {
      const bool defective = i >= safe_count;
      const uint64_t image_seed =
          derive_seed(spec.seed, {kDatasetTag, static_cast<uint64_t>(split_index),
                                  static_cast<uint64_t>(i)});
      DefectSet defects;
      if (defective) {
        Rng pick(derive_seed(image_seed, {1}));
        const int how_many = pick.uniform_int(1, 2);
        while (static_cast<int>(defects.size()) < how_many)
          defects.insert(pool[static_cast<size_t>(pick.uniform_int(0, int(pool.size()) - 1))]);
      }
      RenderedScene rendered = render_track(geometry, defects, derive_seed(image_seed, {2}), scene);
      Image small = resize_area(rendered.image, spec.image_size, spec.image_size);

      DatasetEntry entry;
      entry.path = std::string(split) + "/" + (defective ? "defective" : "safe") + "/" +
                   zero_pad(defective ? i - safe_count : i, 4) + ".png";
      entry.defective = defective;
      entry.labels = defects;
      save_png_gray(out_dir + "/" + entry.path, small);
      manifest.entries.push_back(std::move(entry));
    }
    ++split_index;
  }

  nlohmann::json j;
  for (const auto& e : manifest.entries) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& d : e.labels) labels.push_back(format_component_label(d));
    j[e.path] = {{"class", e.defective ? "defective" : "safe"}, {"labels", labels}};
  }
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw std::runtime_error(out_dir + "/manifest.json: cannot write");
  out << j.dump(2) << "\n";
  return manifest;
}

DatasetManifest load_dataset_manifest(const std::string& dataset_dir) {
  std::ifstream in(dataset_dir + "/manifest.json");
  if (!in) throw std::runtime_error(dataset_dir + "/manifest.json: cannot open");
  nlohmann::json j;
  in >> j;
  DatasetManifest manifest;
  for (const auto& [path, meta] : j.items()) {
    DatasetEntry e;
    e.path = path;
    e.defective = meta.at("class").get<std::string>() == "defective";
    for (const auto& l : meta.at("labels"))
      e.labels.insert(parse_component_label(l.get<std::string>()));
    manifest.entries.push_back(std::move(e));
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.path < b.path; });
  return manifest;
}

Image flip_horizontal(const Image& input) {
  Image out(input.width, input.height);
  for (int y = 0; y < input.height; ++y)
    for (int x = 0; x < input.width; ++x) out.at(x, y) = input.at(input.width - 1 - x, y);
  return out;
}

Image translate_fill(const Image& input, int dx, int dy, uint8_t fill) {
  Image out(input.width, input.height, fill);
  for (int y = 0; y < input.height; ++y)
    for (int x = 0; x < input.width; ++x) {
      const int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sx < input.width && sy >= 0 && sy < input.height)
        out.at(x, y) = input.at(sx, sy);
    }
  return out;
}

Image shift_brightness(const Image& input, int delta) {
  Image out = input;
  for (auto& px : out.data)
    px = static_cast<uint8_t>(std::clamp(static_cast<int>(px) + delta, 0, 255));
  return out;
}

Image augment(const Image& input, const AugmentConfig& config, uint64_t seed) {
  if (config.flip_probability < 0.0 || config.flip_probability > 1.0)
    throw std::invalid_argument("flip probability must be in [0, 1]");
  if (config.translate_max_frac < 0.0 || config.translate_max_frac > 0.10)
    throw std::invalid_argument("translation must be at most 10% of the image size");
  if (config.brightness_max_frac < 0.0 || config.brightness_max_frac > 0.10)
    throw std::invalid_argument("brightness shift must be at most 10% of the range");

  Rng rng(seed);
  const bool flip = config.flip_probability > 0.0 && rng.uniform01() <= config.flip_probability;
  const int tx_max = static_cast<int>(std::lround(config.translate_max_frac * input.width));
  const int ty_max = static_cast<int>(std::lround(config.translate_max_frac * input.height));
  const int dx = tx_max > 0 ? rng.uniform_int(-tx_max, tx_max) : 0;
  const int dy = ty_max > 0 ? rng.uniform_int(-ty_max, ty_max) : 0;
  const int b_max = static_cast<int>(std::lround(config.brightness_max_frac * 255.0));
  const int db = b_max > 0 ? rng.uniform_int(-b_max, b_max) : 0;

  Image out = flip ? flip_horizontal(input) : input;
  if (dx != 0 || dy != 0) out = translate_fill(out, dx, dy);
  if (db != 0) out = shift_brightness(out, db);
  return out;
}

}  // namespace trackinspect
