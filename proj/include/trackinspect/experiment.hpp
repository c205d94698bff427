#pragma once
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trackinspect/footage.hpp"
#include "trackinspect/image.hpp"
#include "trackinspect/metrics.hpp"
#include "trackinspect/pipeline.hpp"
#include "trackinspect/scene.hpp"

namespace trackinspect {

// A generated experiment directory pulled into memory: every frame plus the
// injected-defect ground truth.
struct ExperimentData {
  std::string dir;
  std::map<std::string, Image> images;           // footage name -> frame
  std::map<std::string, DefectSet> ground_truth; // footage name -> defects
};

ExperimentData load_experiment(const std::string& dir);

// One scored control/variable comparison.
struct RunOutcome {
  RunPairSpec pair;
  InspectionReport report;
  ConfusionMatrix confusion;   // component-level, 49-part universe
  LikertScore likert;
  bool verdict_correct = false;
  bool labels_exact = false;   // reported label set == injected label set
};

struct ExperimentSummary {
  std::vector<RunOutcome> runs;
  ConfusionMatrix total;
  std::optional<double> tpr;
  std::optional<double> fpr;
  int verdicts_correct = 0;
  int labels_exact_count = 0;
  double score_mean = 0.0;
  double score_stddev = 0.0;
  double acceptance_percent = 0.0;  // mean of per-case mean scores / 5 * 100
  std::array<int, 5> histogram{};
};

RunOutcome run_one(const ExperimentData& data, const RunPairSpec& pair,
                   const TrackGeometry& geometry, const PipelineConfig& config);

// Runs every pair in the manifest.  When out_dir is non-empty, writes per-run
// reports under <out_dir>/runs/ (text, JSON, and red-box overlays when
// `overlays` is set) plus confusion.csv, likert.csv, stats.csv and
// histogram.csv at the top level.
ExperimentSummary run_experiment(const ExperimentData& data, const RunManifest& manifest,
                                 const TrackGeometry& geometry, const PipelineConfig& config,
                                 const std::string& out_dir = "", bool overlays = true);

// Component-level TPR/FPR aggregated over all runs, per difference threshold.
// Preprocessing and registration are threshold-independent and therefore done
// once per pair.  Thresholds must be ascending; both rates are checked to be
// non-increasing along the sweep and a violation throws.
RocCurve roc_sweep(const ExperimentData& data, const RunManifest& manifest,
                   const TrackGeometry& geometry, const PipelineConfig& base,
                   const std::vector<int>& thresholds);

}  // namespace trackinspect
