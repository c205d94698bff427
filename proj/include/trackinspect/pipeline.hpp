#pragma once
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trackinspect/image.hpp"
#include "trackinspect/scene.hpp"

namespace trackinspect {

struct PipelineConfig {
  int diff_threshold = 10;        // gray levels, 1..254
  int min_blob_area = 12;         // px
  int registration_window = 8;    // +- px searched
  int median_radius = 1;          // 0 disables, 1 = 3x3
  int morph_open_radius = 1;      // 0 disables, 1 = 3x3
  double max_mapping_distance = 15.0;  // px, blob centroid to footprint center
};

enum class BlobDirection { MissingInTest, ExtraInTest };
enum class Verdict { Safe, NotSafe };

// A connected difference region that survived opening and area filtering.
// Coordinates are in the reference (control) frame.
struct DefectBlob {
  Rect box;
  int area = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  BlobDirection direction = BlobDirection::MissingInTest;
  std::optional<ComponentId> mapped;
};

struct StepRecord {
  std::string name;
  std::string detail;
  bool ok = true;
};

struct InspectionReport {
  std::string control_name = "control";
  std::string variable_name = "variable";
  std::optional<Verdict> verdict;  // absent when a stage failed
  int offset_dx = 0;
  int offset_dy = 0;
  std::vector<DefectBlob> blobs;
  std::set<std::string> defect_labels;
  std::vector<StepRecord> step_log;
  PipelineConfig config;
};

// 3x3-or-larger median filter (replicate border) followed by a linear
// contrast stretch mapping the observed min/max to 0/255.  Constant images
// pass through the stretch unchanged.
Image preprocess(const Image& input, const PipelineConfig& config);

// Exhaustive integer translation search over [-window, window]^2 minimizing
// the mean absolute difference over the overlap.  Ties prefer the smaller
// |dx|+|dy|, then lexicographic (dx, dy).  The returned offset is the
// translation applied to the test image content relative to the reference.
std::pair<int, int> register_translation(const Image& reference, const Image& test, int window);

// Thresholded signed differences after aligning by `offset`:
//   missing = reference brighter than test by more than threshold,
//   extra   = test brighter than reference by more than threshold.
// Masks are 0/1 images in reference coordinates; pixels without overlap are 0.
struct DifferenceMasks {
  Image missing;
  Image extra;
};
DifferenceMasks difference_map(const Image& reference, const Image& test,
                               std::pair<int, int> offset, int threshold);

// Morphological opening, 8-connected labeling, and an area filter.  Blobs
// come back sorted by area (desc), then top-left bounding box corner.
std::vector<DefectBlob> segment(const Image& mask, int min_area, int open_radius);

// Maps each blob to the inventory component whose footprint center is
// nearest its centroid, when that distance is within max_mapping_distance.
std::vector<DefectBlob> localize(const std::vector<DefectBlob>& blobs,
                                 const TrackGeometry& geometry, double max_mapping_distance);

// Full reference-comparison pipeline.  A stage failure produces a report
// with no verdict and the failing step recorded instead of an exception.
InspectionReport inspect(const Image& control, const Image& variable,
                         const TrackGeometry& geometry, const PipelineConfig& config,
                         const std::string& control_name = "control",
                         const std::string& variable_name = "variable");

// RGB copy of the variable image with each blob's bounding box outlined in
// pure red.  A safe inspection yields an unmarked promotion to RGB.
RgbImage render_overlay(const Image& control, const Image& variable,
                        const InspectionReport& report);

// The eight fixed stage lines of the operator-facing text report.
std::vector<std::string> format_text_report(const InspectionReport& report);

nlohmann::json report_to_json(const InspectionReport& report);

}  // namespace trackinspect
