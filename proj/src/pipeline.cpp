#include "trackinspect/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace trackinspect {

namespace {

void require_same_size(const Image& a, const Image& b, const char* who) {
  if (!a.same_size(b))
    throw std::invalid_argument(std::string(who) + ": image dimensions differ (" +
                                std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
}

}  // namespace

Image preprocess(const Image& input, const PipelineConfig& config) {
  if (input.width == 0 || input.height == 0)
    throw std::invalid_argument("preprocess: empty image");
  if (config.median_radius < 0)
    throw std::invalid_argument("preprocess: median radius must be >= 0");

  const int r = config.median_radius;
  Image filtered = input;
  if (r > 0) {
    std::vector<uint8_t> window;
    window.reserve(static_cast<size_t>(2 * r + 1) * (2 * r + 1));
    for (int y = 0; y < input.height; ++y)
      for (int x = 0; x < input.width; ++x) {
        window.clear();
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, input.width - 1);
            const int sy = std::clamp(y + dy, 0, input.height - 1);
            window.push_back(input.at(sx, sy));
          }
        auto mid = window.begin() + window.size() / 2;
        std::nth_element(window.begin(), mid, window.end());
        filtered.at(x, y) = *mid;
      }
  }

  const auto [lo_it, hi_it] = std::minmax_element(filtered.data.begin(), filtered.data.end());
  const int lo = *lo_it, hi = *hi_it;
  if (lo == hi) return filtered;  // constant image: stretch is identity
  for (auto& px : filtered.data)
    px = static_cast<uint8_t>(std::lround(255.0 * (px - lo) / (hi - lo)));
  return filtered;
}

std::pair<int, int> register_translation(const Image& reference, const Image& test, int window) {
  require_same_size(reference, test, "register_translation");
  if (window < 0) throw std::invalid_argument("register_translation: window must be >= 0");
  if (window >= reference.width || window >= reference.height)
    throw std::invalid_argument("register_translation: window leaves no overlap");

  const int W = reference.width, H = reference.height;
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> best_offset{0, 0};
  for (int dy = -window; dy <= window; ++dy) {
    const int y0 = std::max(0, -dy), y1 = H - 1 - std::max(0, dy);
    for (int dx = -window; dx <= window; ++dx) {
      const int x0 = std::max(0, -dx), x1 = W - 1 - std::max(0, dx);
      long long sad = 0;
      for (int y = y0; y <= y1; ++y) {
        const uint8_t* rrow = &reference.data[static_cast<size_t>(y) * W];
        const uint8_t* trow = &test.data[static_cast<size_t>(y + dy) * W + dx];
        for (int x = x0; x <= x1; ++x) sad += std::abs(int(rrow[x]) - int(trow[x]));
      }
      const double score = double(sad) / (double(x1 - x0 + 1) * double(y1 - y0 + 1));
      const auto rank = [](const std::pair<int, int>& o) {
        return std::tuple(std::abs(o.first) + std::abs(o.second), o.first, o.second);
      };
      if (score < best ||
          (score == best && rank({dx, dy}) < rank(best_offset))) {
        best = score;
        best_offset = {dx, dy};
      }
    }
  }
  return best_offset;
}

DifferenceMasks difference_map(const Image& reference, const Image& test,
                               std::pair<int, int> offset, int threshold) {
  require_same_size(reference, test, "difference_map");
  if (threshold < 1 || threshold > 254)
    throw std::invalid_argument("difference_map: threshold must be in 1..254");
  const auto [dx, dy] = offset;
  if (std::abs(dx) >= reference.width || std::abs(dy) >= reference.height)
    throw std::invalid_argument("difference_map: offset leaves no overlap");

  const int W = reference.width, H = reference.height;
  DifferenceMasks masks{Image(W, H, 0), Image(W, H, 0)};
  const int x0 = std::max(0, -dx), x1 = W - 1 - std::max(0, dx);
  const int y0 = std::max(0, -dy), y1 = H - 1 - std::max(0, dy);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const int d = int(reference.at(x, y)) - int(test.at(x + dx, y + dy));
      if (d > threshold) masks.missing.at(x, y) = 1;
      else if (-d > threshold) masks.extra.at(x, y) = 1;
    }
  return masks;
}

namespace {

Image erode(const Image& mask, int r) {
  Image out(mask.width, mask.height, 0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      bool all = true;
      for (int dy = -r; all && dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = x + dx, sy = y + dy;
          if (sx < 0 || sx >= mask.width || sy < 0 || sy >= mask.height || !mask.at(sx, sy)) {
            all = false;
            break;
          }
        }
      if (all) out.at(x, y) = 1;
    }
  return out;
}

Image dilate(const Image& mask, int r) {
  Image out(mask.width, mask.height, 0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      bool any = false;
      for (int dy = -r; !any && dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = x + dx, sy = y + dy;
          if (sx >= 0 && sx < mask.width && sy >= 0 && sy < mask.height && mask.at(sx, sy)) {
            any = true;
            break;
          }
        }
      if (any) out.at(x, y) = 1;
    }
  return out;
}

}  // namespace

std::vector<DefectBlob> segment(const Image& mask, int min_area, int open_radius) {
  if (min_area < 1) throw std::invalid_argument("segment: min_area must be >= 1");
  if (open_radius < 0) throw std::invalid_argument("segment: open_radius must be >= 0");

  Image opened = open_radius > 0 ? dilate(erode(mask, open_radius), open_radius) : mask;

  const int W = opened.width, H = opened.height;
  std::vector<int> label(static_cast<size_t>(W) * H, 0);
  std::vector<DefectBlob> blobs;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (!opened.at(x, y) || label[static_cast<size_t>(y) * W + x]) continue;
      const int id = static_cast<int>(blobs.size()) + 1;
      DefectBlob blob;
      long long sum_x = 0, sum_y = 0;
      int min_x = x, max_x = x, min_y = y, max_y = y;
      stack.push_back({x, y});
      label[static_cast<size_t>(y) * W + x] = id;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++blob.area;
        sum_x += cx;
        sum_y += cy;
        min_x = std::min(min_x, cx);
        max_x = std::max(max_x, cx);
        min_y = std::min(min_y, cy);
        max_y = std::max(max_y, cy);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
            auto& l = label[static_cast<size_t>(ny) * W + nx];
            if (opened.at(nx, ny) && !l) {
              l = id;
              stack.push_back({nx, ny});
            }
          }
      }
      blob.box = {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
      blob.centroid_x = double(sum_x) / blob.area;
      blob.centroid_y = double(sum_y) / blob.area;
      blobs.push_back(blob);
    }

  std::erase_if(blobs, [&](const DefectBlob& b) { return b.area < min_area; });
  std::sort(blobs.begin(), blobs.end(), [](const DefectBlob& a, const DefectBlob& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.box.x < b.box.x;
  });
  return blobs;
}

std::vector<DefectBlob> localize(const std::vector<DefectBlob>& blobs,
                                 const TrackGeometry& geometry, double max_mapping_distance) {
  if (max_mapping_distance < 0)
    throw std::invalid_argument("localize: max_mapping_distance must be >= 0");
  std::vector<DefectBlob> out = blobs;
  for (auto& blob : out) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<ComponentId> best_id;
    for (const auto& [id, fp] : geometry.footprints) {
      const double dx = blob.centroid_x - fp.cx();
      const double dy = blob.centroid_y - fp.cy();
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best) {
        best = d;
        best_id = id;
      }
    }
    blob.mapped = (best_id && best <= max_mapping_distance) ? best_id : std::nullopt;
  }
  return out;
}

InspectionReport inspect(const Image& control, const Image& variable,
                         const TrackGeometry& geometry, const PipelineConfig& config,
                         const std::string& control_name, const std::string& variable_name) {
  InspectionReport report;
  report.control_name = control_name;
  report.variable_name = variable_name;
  report.config = config;

  auto step = [&](const char* name, std::string detail) {
    report.step_log.push_back({name, std::move(detail), true});
  };
  auto fail_step = [&](const char* name, const std::string& why) {
    report.step_log.push_back({name, why, false});
    report.verdict.reset();
  };

  try {
    if (control.width == 0 || variable.width == 0)
      throw std::invalid_argument("empty image");
    require_same_size(control, variable, "inspect");
    step("acquire", control_name + " vs " + variable_name);
  } catch (const std::exception& e) {
    fail_step("acquire", e.what());
    return report;
  }

  Image ref, test;
  try {
    ref = preprocess(control, config);
    test = preprocess(variable, config);
    step("preprocess", "median radius " + std::to_string(config.median_radius) +
                           ", contrast stretched");
  } catch (const std::exception& e) {
    fail_step("preprocess", e.what());
    return report;
  }

  DifferenceMasks masks;
  try {
    const auto offset = register_translation(ref, test, config.registration_window);
    report.offset_dx = offset.first;
    report.offset_dy = offset.second;
    masks = difference_map(ref, test, offset, config.diff_threshold);
    step("extract_features", "offset (" + std::to_string(offset.first) + ", " +
                                 std::to_string(offset.second) + "), threshold " +
                                 std::to_string(config.diff_threshold));
  } catch (const std::exception& e) {
    fail_step("extract_features", e.what());
    return report;
  }

  try {
    auto missing = segment(masks.missing, config.min_blob_area, config.morph_open_radius);
    auto extra = segment(masks.extra, config.min_blob_area, config.morph_open_radius);
    for (auto& b : extra) b.direction = BlobDirection::ExtraInTest;
    missing.insert(missing.end(), extra.begin(), extra.end());
    std::sort(missing.begin(), missing.end(), [](const DefectBlob& a, const DefectBlob& b) {
      if (a.area != b.area) return a.area > b.area;
      if (a.box.y != b.box.y) return a.box.y < b.box.y;
      return a.box.x < b.box.x;
    });
    report.blobs = localize(missing, geometry, config.max_mapping_distance);
    step("segment", std::to_string(report.blobs.size()) + " region(s) of interest");
  } catch (const std::exception& e) {
    fail_step("segment", e.what());
    return report;
  }

  for (const auto& b : report.blobs)
    if (b.mapped) report.defect_labels.insert(format_component_label(*b.mapped));
  std::string labels;
  for (const auto& l : report.defect_labels) labels += (labels.empty() ? "" : " ") + l;
  step("present", report.blobs.empty() ? "no regions to mark"
                                       : "marked: " + (labels.empty() ? "(unmapped)" : labels));

  report.verdict = report.blobs.empty() ? Verdict::Safe : Verdict::NotSafe;
  step("decide", report.verdict == Verdict::Safe ? "safe" : "not safe");
  return report;
}

RgbImage render_overlay(const Image& control, const Image& variable,
                        const InspectionReport& report) {
  require_same_size(control, variable, "render_overlay");
  RgbImage out(variable.width, variable.height);
  for (int y = 0; y < variable.height; ++y)
    for (int x = 0; x < variable.width; ++x) {
      uint8_t* p = out.px(x, y);
      p[0] = p[1] = p[2] = variable.at(x, y);
    }
  auto mark = [&](int x, int y) {
    if (x < 0 || x >= out.width || y < 0 || y >= out.height) return;
    uint8_t* p = out.px(x, y);
    p[0] = 255;
    p[1] = 0;
    p[2] = 0;
  };
  for (const auto& blob : report.blobs) {
    // Blob coordinates live in the reference frame; shift by the registration
    // offset to land on the same content in the variable image.
    const int x0 = blob.box.x + report.offset_dx;
    const int y0 = blob.box.y + report.offset_dy;
    const int x1 = x0 + blob.box.w - 1;
    const int y1 = y0 + blob.box.h - 1;
    for (int x = x0; x <= x1; ++x) {
      mark(x, y0);
      mark(x, y1);
    }
    for (int y = y0; y <= y1; ++y) {
      mark(x0, y);
      mark(x1, y);
    }
  }
  return out;
}

std::vector<std::string> format_text_report(const InspectionReport& report) {
  const std::string& c = report.control_name;
  const std::string& v = report.variable_name;
  const std::string pair = c + " vs. " + v;
  std::vector<std::string> lines = {
      "Acquiring Image 1 (Control): " + c,
      "Acquiring Image 2 (Variable): " + v,
      "Pre-processing Image 1 (Control): " + c,
      "Pre-processing Image 2 (Variable): " + v,
      "Extract Image Features (Control vs. Variable): " + pair,
      "Detection/segmentation of POI (Control vs. Variable): " + pair,
      "Presenting Visual Track Problems (Control vs. Variable): " + pair,
  };
  if (!report.verdict) {
    std::string why = "stage error";
    for (const auto& s : report.step_log)
      if (!s.ok) why = s.name + ": " + s.detail;
    lines.push_back(">> Prediction of Final Decision: INSPECTION FAILED (" + why + ")");
  } else if (*report.verdict == Verdict::Safe) {
    lines.push_back(">> Prediction of Final Decision: TRACK IS SAFE");
  } else {
    lines.push_back(">> Prediction of Final Decision: DANGER: ***TRACK IS NOT SAFE!***");
  }
  return lines;
}

nlohmann::json report_to_json(const InspectionReport& report) {
  nlohmann::json j;
  j["control"] = report.control_name;
  j["variable"] = report.variable_name;
  if (report.verdict)
    j["verdict"] = *report.verdict == Verdict::Safe ? "safe" : "not_safe";
  else
    j["verdict"] = nullptr;
  j["offset"] = {{"dx", report.offset_dx}, {"dy", report.offset_dy}};
  auto& labels = j["defect_labels"] = nlohmann::json::array();
  for (const auto& l : report.defect_labels) labels.push_back(l);
  auto& blobs = j["blobs"] = nlohmann::json::array();
  for (const auto& b : report.blobs) {
    nlohmann::json jb;
    jb["box"] = {{"x", b.box.x}, {"y", b.box.y}, {"w", b.box.w}, {"h", b.box.h}};
    jb["area"] = b.area;
    jb["centroid"] = {{"x", b.centroid_x}, {"y", b.centroid_y}};
    jb["direction"] =
        b.direction == BlobDirection::MissingInTest ? "missing_in_test" : "extra_in_test";
    if (b.mapped)
      jb["label"] = format_component_label(*b.mapped);
    else
      jb["label"] = nullptr;
    blobs.push_back(std::move(jb));
  }
  auto& steps = j["steps"] = nlohmann::json::array();
  for (const auto& s : report.step_log)
    steps.push_back({{"name", s.name}, {"detail", s.detail}, {"ok", s.ok}});
  j["config"] = {{"diff_threshold", report.config.diff_threshold},
                 {"min_blob_area", report.config.min_blob_area},
                 {"registration_window", report.config.registration_window},
                 {"median_radius", report.config.median_radius},
                 {"morph_open_radius", report.config.morph_open_radius},
                 {"max_mapping_distance", report.config.max_mapping_distance}};
  return j;
}

}  // namespace trackinspect
