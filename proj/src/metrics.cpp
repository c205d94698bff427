#include "trackinspect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace trackinspect {

double true_positive_rate(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0)
    throw std::invalid_argument("true_positive_rate: no positive ground truth");
  return static_cast<double>(cm.tp) / (cm.tp + cm.fn);
}

double false_positive_rate(const ConfusionMatrix& cm) {
  if (cm.fp + cm.tn == 0)
    throw std::invalid_argument("false_positive_rate: no negative ground truth");
  return static_cast<double>(cm.fp) / (cm.fp + cm.tn);
}

ConfusionMatrix confusion_from_sets(const DefectSet& expected, const DefectSet& predicted) {
  ConfusionMatrix cm;
  for (const ComponentId& part : inventory()) {
    const bool exp = expected.count(part) > 0;
    const bool pred = predicted.count(part) > 0;
    if (exp && pred) ++cm.tp;
    else if (exp) ++cm.fn;
    else if (pred) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

LikertScore likert_score(bool textual_ok, bool steps_ok, bool graphical_ok, bool concur,
                         const ConfusionMatrix& cm) {
  LikertScore s;
  s.textual_ok = textual_ok;
  s.steps_ok = steps_ok;
  s.graphical_ok = graphical_ok;
  s.concur = concur;

  const int expected = cm.tp + cm.fn;
  const double recall = expected == 0 ? 1.0 : static_cast<double>(cm.tp) / expected;
  if (recall >= 1.0) s.detection = 1.0;
  else if (recall >= 0.5) s.detection = 2.0 / 3.0;
  else if (recall > 0.0) s.detection = 1.0 / 3.0;
  else s.detection = 0.0;

  if (cm.fp == 0) s.spurious_penalty = 0.0;
  else if (cm.fp == 1) s.spurious_penalty = 1.0 / 3.0;
  else if (cm.fp == 2) s.spurious_penalty = 2.0 / 3.0;
  else s.spurious_penalty = 1.0;

  s.value = (textual_ok ? 1.0 : 0.0) + (steps_ok ? 1.0 : 0.0) + s.detection +
            (graphical_ok ? 1.0 : 0.0) + (concur ? 1.0 : 0.0) - s.spurious_penalty;
  return s;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double overall_acceptance(const std::vector<std::vector<double>>& per_case_scores) {
  if (per_case_scores.empty()) throw std::invalid_argument("overall_acceptance: no cases");
  std::vector<double> case_means;
  case_means.reserve(per_case_scores.size());
  for (const auto& scores : per_case_scores) case_means.push_back(mean(scores));
  return mean(case_means) / 5.0 * 100.0;
}

std::array<int, 5> score_histogram(const std::vector<double>& scores) {
  std::array<int, 5> bins{};
  for (double v : scores) {
    int grade = static_cast<int>(std::floor(v + 0.5));
    grade = std::clamp(grade, 1, 5);
    ++bins[static_cast<size_t>(grade - 1)];
  }
  return bins;
}

namespace {
std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}
}  // namespace

std::string confusion_csv(const std::vector<std::pair<std::string, ConfusionMatrix>>& rows) {
  std::string out = "run,tp,fn,fp,tn\n";
  for (const auto& [run, cm] : rows)
    out += run + ',' + std::to_string(cm.tp) + ',' + std::to_string(cm.fn) + ',' +
           std::to_string(cm.fp) + ',' + std::to_string(cm.tn) + '\n';
  return out;
}

std::string likert_csv(const std::vector<std::pair<std::string, LikertScore>>& rows) {
  std::string out = "run,textual_ok,steps_ok,detection,graphical_ok,concur,spurious_penalty,score\n";
  for (const auto& [run, s] : rows)
    out += run + ',' + (s.textual_ok ? "1" : "0") + ',' + (s.steps_ok ? "1" : "0") + ',' +
           fmt(s.detection) + ',' + (s.graphical_ok ? "1" : "0") + ',' +
           (s.concur ? "1" : "0") + ',' + fmt(s.spurious_penalty) + ',' + fmt(s.value) + '\n';
  return out;
}

std::string stats_csv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = "metric,value\n";
  for (const auto& [name, value] : rows) out += name + ',' + fmt(value) + '\n';
  return out;
}

std::string histogram_csv(const std::array<int, 5>& bins) {
  std::string out = "score,count\n";
  for (int i = 0; i < 5; ++i)
    out += std::to_string(i + 1) + ',' + std::to_string(bins[static_cast<size_t>(i)]) + '\n';
  return out;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "threshold,tpr,fpr\n";
  for (const RocPoint& p : curve.points)
    out += std::to_string(p.threshold) + ',' + fmt(p.tpr) + ',' + fmt(p.fpr) + '\n';
  return out;
}

}  // namespace trackinspect
