#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include "trackinspect/cnn/tensor.hpp"
#include "trackinspect/dataset.hpp"
#include "trackinspect/image.hpp"

namespace trackinspect::cnn {

// A dataset split held in memory as 8-bit images plus class indices
// (0 = safe, 1 = defective).
struct LoadedDataset {
  int width = 0;
  int height = 0;
  std::vector<Image> images;
  std::vector<int> labels;

  size_t size() const { return images.size(); }
};

// Reads one split ("train", "valid", "test") of a generated dataset
// directory via its manifest.
inline LoadedDataset load_split(const std::string& dataset_dir, const std::string& split) {
  const DatasetManifest manifest = load_dataset_manifest(dataset_dir);
  LoadedDataset out;
  const std::string prefix = split + "/";
  for (const DatasetEntry& e : manifest.entries) {
    if (e.path.rfind(prefix, 0) != 0) continue;
    Image img = load_png_gray(dataset_dir + "/" + e.path);
    if (out.images.empty()) {
      out.width = img.width;
      out.height = img.height;
    } else if (img.width != out.width || img.height != out.height) {
      throw std::runtime_error("dataset split '" + split + "': image size mismatch at " + e.path);
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(e.defective ? 1 : 0);
  }
  if (out.images.empty())
    throw std::runtime_error("dataset split '" + split + "' is empty in " + dataset_dir);
  return out;
}

// Packs the selected images into an (N,H,W,1) tensor scaled to [0,1].
template <class T>
Tensor<T> batch_tensor(const LoadedDataset& ds, const std::vector<size_t>& idx) {
  if (idx.empty()) throw std::invalid_argument("batch_tensor: empty index list");
  Tensor<T> t(static_cast<int>(idx.size()), ds.height, ds.width, 1);
  size_t o = 0;
  for (size_t i : idx) {
    const Image& img = ds.images.at(i);
    for (uint8_t px : img.data) t.v[o++] = static_cast<T>(px) / static_cast<T>(255);
  }
  return t;
}

template <class T>
Tensor<T> batch_tensor(const std::vector<Image>& images) {
  if (images.empty()) throw std::invalid_argument("batch_tensor: no images");
  Tensor<T> t(static_cast<int>(images.size()), images[0].height, images[0].width, 1);
  size_t o = 0;
  for (const Image& img : images) {
    if (img.width != images[0].width || img.height != images[0].height)
      throw std::invalid_argument("batch_tensor: mixed image sizes");
    for (uint8_t px : img.data) t.v[o++] = static_cast<T>(px) / static_cast<T>(255);
  }
  return t;
}

template <class T>
Tensor<T> onehot_tensor(const LoadedDataset& ds, const std::vector<size_t>& idx, int classes) {
  Tensor<T> t(static_cast<int>(idx.size()), 1, 1, classes);
  for (size_t n = 0; n < idx.size(); ++n) {
    const int label = ds.labels.at(idx[n]);
    if (label < 0 || label >= classes)
      throw std::invalid_argument("onehot_tensor: label " + std::to_string(label) +
                                  " outside " + std::to_string(classes) + " classes");
    t.at(static_cast<int>(n), 0, 0, label) = T{1};
  }
  return t;
}

}  // namespace trackinspect::cnn
