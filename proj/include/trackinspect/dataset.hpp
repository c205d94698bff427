#pragma once
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "trackinspect/image.hpp"
#include "trackinspect/labels.hpp"
#include "trackinspect/scene.hpp"

namespace trackinspect {

// Safe/defective classifier data.  Each image is a full scene render (with
// the usual per-trial jitter) box-resampled down to image_size x image_size.
struct DatasetSpec {
  std::set<ComponentKind> defect_kinds = {ComponentKind::Block, ComponentKind::Screw,
                                          ComponentKind::Washer, ComponentKind::Connector};
  int train_count = 400;
  int valid_count = 200;
  int test_count = 200;
  double class_balance = 0.5;  // fraction of safe images per split
  int image_size = 64;
  uint64_t seed = 1;
};

struct DatasetEntry {
  std::string path;  // relative to the dataset root
  bool defective = false;
  DefectSet labels;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;
};

// Writes <out>/{train,valid,test}/{safe,defective}/NNNN.png plus
// manifest.json mapping each relative path to its class and defect labels.
// Defective images remove 1-2 uniformly chosen components of the allowed
// kinds.  Deterministic in spec.seed.
DatasetManifest build_cnn_dataset(const std::string& out_dir, const DatasetSpec& spec,
                                  SceneConfig scene = SceneConfig{});

DatasetManifest load_dataset_manifest(const std::string& dataset_dir);

struct AugmentConfig {
  double flip_probability = 0.0;       // horizontal flip
  double translate_max_frac = 0.0;     // of width/height, at most 0.10
  double brightness_max_frac = 0.0;    // of the full 255 range, at most 0.10
};

Image flip_horizontal(const Image& input);
Image translate_fill(const Image& input, int dx, int dy, uint8_t fill = 0);
Image shift_brightness(const Image& input, int delta);

// Random flip / integer translation (zero fill) / brightness shift, all
// drawn deterministically from the seed.
Image augment(const Image& input, const AugmentConfig& config, uint64_t seed);

}  // namespace trackinspect
