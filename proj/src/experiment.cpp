#include "trackinspect/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trackinspect {
namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

DefectSet labels_to_set(const std::set<std::string>& labels) {
  DefectSet out;
  for (const std::string& s : labels) out.insert(parse_component_label(s));
  return out;
}

bool all_steps_ok(const InspectionReport& r) {
  return std::all_of(r.step_log.begin(), r.step_log.end(),
                     [](const StepRecord& s) { return s.ok; });
}

bool step_ok(const InspectionReport& r, const std::string& name) {
  for (const StepRecord& s : r.step_log)
    if (s.name == name) return s.ok;
  return false;
}

}  // namespace

ExperimentData load_experiment(const std::string& dir) {
  ExperimentData data;
  data.dir = dir;

  const std::string gt_path = dir + "/ground_truth.json";
  std::ifstream f(gt_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + gt_path);
  nlohmann::json gt;
  try {
    f >> gt;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(gt_path + ": " + e.what());
  }
  if (!gt.is_object()) throw std::runtime_error(gt_path + ": expected an object");

  for (const auto& [name, labels] : gt.items()) {
    parse_footage_name(name);  // reject foreign keys early
    DefectSet defects;
    for (const auto& label : labels) defects.insert(parse_component_label(label.get<std::string>()));
    data.ground_truth.emplace(name, std::move(defects));
    data.images.emplace(name, load_png_gray(dir + "/" + name + ".png"));
  }
  if (data.images.empty()) throw std::runtime_error(dir + ": experiment holds no frames");
  return data;
}

RunOutcome run_one(const ExperimentData& data, const RunPairSpec& pair,
                   const TrackGeometry& geometry, const PipelineConfig& config) {
  const std::string control_name = format_footage_name(pair.control);
  const std::string variable_name = format_footage_name(pair.variable);
  const auto control_it = data.images.find(control_name);
  const auto variable_it = data.images.find(variable_name);
  if (control_it == data.images.end() || variable_it == data.images.end())
    throw std::runtime_error("experiment at " + data.dir + " is missing frames for " +
                             control_name + " vs " + variable_name);
  const auto gt_it = data.ground_truth.find(variable_name);
  if (gt_it == data.ground_truth.end())
    throw std::runtime_error("no ground truth for " + variable_name);
  const DefectSet& expected = gt_it->second;

  RunOutcome out;
  out.pair = pair;
  out.pair.expected = expected;
  out.report =
      inspect(control_it->second, variable_it->second, geometry, config, control_name,
              variable_name);

  const DefectSet predicted = labels_to_set(out.report.defect_labels);
  out.confusion = confusion_from_sets(expected, predicted);
  out.labels_exact = predicted == expected;

  const bool expect_defective = !expected.empty();
  out.verdict_correct = out.report.verdict.has_value() &&
                        ((*out.report.verdict == Verdict::NotSafe) == expect_defective);

  const bool concur = out.report.verdict.has_value() &&
                      ((*out.report.verdict == Verdict::NotSafe) == !out.report.blobs.empty());
  out.likert = likert_score(out.verdict_correct, all_steps_ok(out.report),
                            step_ok(out.report, "present"), concur, out.confusion);
  return out;
}

ExperimentSummary run_experiment(const ExperimentData& data, const RunManifest& manifest,
                                 const TrackGeometry& geometry, const PipelineConfig& config,
                                 const std::string& out_dir, bool overlays) {
  if (manifest.pairs.empty()) throw std::invalid_argument("run_experiment: empty manifest");

  const bool writing = !out_dir.empty();
  if (writing) std::filesystem::create_directories(out_dir + "/runs");

  ExperimentSummary summary;
  std::map<int, std::vector<double>> case_scores;
  std::vector<double> all_scores;
  std::vector<std::pair<std::string, ConfusionMatrix>> confusion_rows;
  std::vector<std::pair<std::string, LikertScore>> likert_rows;

  for (const RunPairSpec& pair : manifest.pairs) {
    RunOutcome run = run_one(data, pair, geometry, config);
    const std::string name = format_footage_name(pair.variable);

    summary.total += run.confusion;
    summary.verdicts_correct += run.verdict_correct ? 1 : 0;
    summary.labels_exact_count += run.labels_exact ? 1 : 0;
    case_scores[pair.variable.case_number].push_back(run.likert.value);
    all_scores.push_back(run.likert.value);
    confusion_rows.emplace_back(name, run.confusion);
    likert_rows.emplace_back(name, run.likert);

    if (writing) {
      std::ostringstream txt;
      for (const std::string& line : format_text_report(run.report)) txt << line << '\n';
      write_file(out_dir + "/runs/" + name + ".txt", txt.str());
      write_file(out_dir + "/runs/" + name + ".json", report_to_json(run.report).dump(2) + "\n");
      if (overlays) {
        const RgbImage overlay = render_overlay(data.images.at(format_footage_name(pair.control)),
                                                data.images.at(name), run.report);
        save_png_rgb(out_dir + "/runs/" + name + "_overlay.png", overlay);
      }
    }
    summary.runs.push_back(std::move(run));
  }

  if (summary.total.tp + summary.total.fn > 0) summary.tpr = true_positive_rate(summary.total);
  if (summary.total.fp + summary.total.tn > 0) summary.fpr = false_positive_rate(summary.total);
  summary.score_mean = mean(all_scores);
  summary.score_stddev = population_stddev(all_scores);
  std::vector<std::vector<double>> per_case;
  per_case.reserve(case_scores.size());
  for (auto& [case_number, scores] : case_scores) per_case.push_back(std::move(scores));
  summary.acceptance_percent = overall_acceptance(per_case);
  summary.histogram = score_histogram(all_scores);

  if (writing) {
    write_file(out_dir + "/confusion.csv", confusion_csv(confusion_rows));
    write_file(out_dir + "/likert.csv", likert_csv(likert_rows));
    std::vector<std::pair<std::string, double>> stats = {
        {"runs", static_cast<double>(summary.runs.size())},
        {"verdicts_correct", static_cast<double>(summary.verdicts_correct)},
        {"labels_exact", static_cast<double>(summary.labels_exact_count)},
        {"score_mean", summary.score_mean},
        {"score_stddev", summary.score_stddev},
        {"acceptance_percent", summary.acceptance_percent},
    };
    if (summary.tpr) stats.emplace_back("tpr", *summary.tpr);
    if (summary.fpr) stats.emplace_back("fpr", *summary.fpr);
    write_file(out_dir + "/stats.csv", stats_csv(stats));
    write_file(out_dir + "/histogram.csv", histogram_csv(summary.histogram));
  }
  return summary;
}

RocCurve roc_sweep(const ExperimentData& data, const RunManifest& manifest,
                   const TrackGeometry& geometry, const PipelineConfig& base,
                   const std::vector<int>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("roc_sweep: no thresholds");
  for (size_t i = 1; i < thresholds.size(); ++i)
    if (thresholds[i] <= thresholds[i - 1])
      throw std::invalid_argument("roc_sweep: thresholds must be strictly ascending");

  // Threshold-independent work, once per pair.
  struct Prepared {
    Image control;
    Image variable;
    std::pair<int, int> offset;
    const DefectSet* expected;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(manifest.pairs.size());
  for (const RunPairSpec& pair : manifest.pairs) {
    const std::string control_name = format_footage_name(pair.control);
    const std::string variable_name = format_footage_name(pair.variable);
    Prepared p;
    p.control = preprocess(data.images.at(control_name), base);
    p.variable = preprocess(data.images.at(variable_name), base);
    p.offset = register_translation(p.control, p.variable, base.registration_window);
    const auto gt_it = data.ground_truth.find(variable_name);
    if (gt_it == data.ground_truth.end())
      throw std::runtime_error("no ground truth for " + variable_name);
    p.expected = &gt_it->second;
    prepared.push_back(std::move(p));
  }

  RocCurve curve;
  for (int threshold : thresholds) {
    ConfusionMatrix total;
    for (const Prepared& p : prepared) {
      const DifferenceMasks masks = difference_map(p.control, p.variable, p.offset, threshold);
      std::vector<DefectBlob> blobs = segment(masks.missing, base.min_blob_area,
                                              base.morph_open_radius);
      const std::vector<DefectBlob> extra = segment(masks.extra, base.min_blob_area,
                                                    base.morph_open_radius);
      blobs.insert(blobs.end(), extra.begin(), extra.end());
      DefectSet predicted;
      for (const DefectBlob& b : localize(blobs, geometry, base.max_mapping_distance))
        if (b.mapped) predicted.insert(*b.mapped);
      total += confusion_from_sets(*p.expected, predicted);
    }
    RocPoint point;
    point.threshold = threshold;
    point.tpr = true_positive_rate(total);
    point.fpr = false_positive_rate(total);
    if (!curve.points.empty()) {
      const RocPoint& prev = curve.points.back();
      if (point.tpr > prev.tpr + 1e-12 || point.fpr > prev.fpr + 1e-12)
        throw std::runtime_error(
            "roc_sweep: detection rates rose when the threshold tightened (T=" +
            std::to_string(threshold) + ")");
    }
    curve.points.push_back(point);
  }
  return curve;
}

}  // namespace trackinspect
