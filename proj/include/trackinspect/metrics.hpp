#pragma once
#include <array>
#include <string>
#include <vector>

#include "trackinspect/labels.hpp"

namespace trackinspect {

struct ConfusionMatrix {
  int tp = 0;
  int fn = 0;
  int fp = 0;
  int tn = 0;

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp; fn += o.fn; fp += o.fp; tn += o.tn;
    return *this;
  }
};

double true_positive_rate(const ConfusionMatrix& cm);   // tp / (tp + fn)
double false_positive_rate(const ConfusionMatrix& cm);  // fp / (fp + tn)

// Component-level confusion over the full 49-part inventory: a part is
// positive when it is expected defective, predicted positive when reported.
ConfusionMatrix confusion_from_sets(const DefectSet& expected, const DefectSet& predicted);

// ---- reviewer-style scoring -------------------------------------------------

// Five graded aspects of one inspection run, combined into a 0-5 style score:
//   textual/steps/graphical/concur contribute 1 point each,
//   detection contributes by recall (1, 2/3, 1/3, 0),
//   spurious detections subtract up to 1 point.
struct LikertScore {
  bool textual_ok = false;
  bool steps_ok = false;
  bool graphical_ok = false;
  bool concur = false;
  double detection = 0.0;
  double spurious_penalty = 0.0;
  double value = 0.0;
};

LikertScore likert_score(bool textual_ok, bool steps_ok, bool graphical_ok, bool concur,
                         const ConfusionMatrix& cm);

double mean(const std::vector<double>& v);
double population_stddev(const std::vector<double>& v);

// Mean of per-case mean scores, as a percentage of the 5-point maximum.
double overall_acceptance(const std::vector<std::vector<double>>& per_case_scores);

// Buckets scores into the five integer grades by rounding half-up and
// clamping to [1, 5]; result[k] counts grade k+1.
std::array<int, 5> score_histogram(const std::vector<double>& scores);

// ---- ROC --------------------------------------------------------------------

struct RocPoint {
  int threshold = 0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

// ---- CSV formatting -----------------------------------------------------------

std::string confusion_csv(const std::vector<std::pair<std::string, ConfusionMatrix>>& rows);
std::string likert_csv(const std::vector<std::pair<std::string, LikertScore>>& rows);
std::string stats_csv(const std::vector<std::pair<std::string, double>>& rows);
std::string histogram_csv(const std::array<int, 5>& bins);
std::string roc_csv(const RocCurve& curve);

}  // namespace trackinspect
