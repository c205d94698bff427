#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace trackinspect {

// 8-bit grayscale raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  Image() = default;
  Image(int w, int h, uint8_t fill = 0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image&) const = default;
};

// 8-bit RGB raster, row-major, interleaved.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

  uint8_t* px(int x, int y) { return &data[(static_cast<size_t>(y) * width + x) * 3]; }
  const uint8_t* px(int x, int y) const {
    return &data[(static_cast<size_t>(y) * width + x) * 3];
  }
  bool operator==(const RgbImage&) const = default;
};

// PNG I/O.  Loading converts RGB(A) input to Rec.601 luminance; saving always
// writes 8-bit grayscale / 8-bit RGB.  All throw std::runtime_error on I/O or
// decode problems.
Image load_png_gray(const std::string& path);
void save_png_gray(const std::string& path, const Image& img);
void save_png_rgb(const std::string& path, const RgbImage& img);

// Box-filter resample used when emitting CNN-sized images; handles
// non-integer scale factors by area weighting.
Image resize_area(const Image& src, int out_width, int out_height);

}  // namespace trackinspect
