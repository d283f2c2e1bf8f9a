#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stancecast/common.hpp"
#include "stancecast/corpus.hpp"

// Classification metrics, F1-maximizing threshold tuning and the per-window
// evaluation harness.

namespace stancecast::eval {

struct MetricsReport {
  std::string slice_id;
  std::int64_t n_class0 = 0;
  std::int64_t n_class1 = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.0;
  double prc_auc = 0.0;
  std::int64_t tn = 0, fp = 0, fn = 0, tp = 0;
  double threshold_used = 0.5;
  // Zero-denominator metrics are reported as 0 with the flag set; metrics
  // undefined on a single-class slice additionally get *_defined = false.
  bool precision_flagged = false;
  bool recall_flagged = false;
  bool f1_flagged = false;
  bool roc_auc_defined = true;
  bool prc_auc_defined = true;
};

// Predicts 1 iff score >= threshold. Leaves roc/prc fields untouched.
MetricsReport confusion_and_rates(const std::vector<double>& scores,
                                  const std::vector<int>& labels,
                                  double threshold);

// Probability a random positive outscores a random negative, ties 1/2;
// computed from midranks. DataError when a class is missing.
double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels);

// Average precision over descending-score cuts, equal scores grouped into
// one cut. DataError when there is no positive.
double prc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels);

struct ThresholdCurve {
  std::vector<double> grid;   // ascending
  std::vector<double> f1_at;  // parallel to grid
  double best_threshold = 0.5;
  double best_f1 = 0.0;
};

// Maximizes F1 over {step, 2*step, ..., 1 - step} plus every distinct score.
// Ties break toward the threshold nearest 0.5, then toward the lower value.
ThresholdCurve tune_threshold(const std::vector<double>& scores,
                              const std::vector<int>& labels,
                              double grid_step = 1e-4);

struct ScoredSample {
  corpus::WindowSpec window;
  double score = 0.0;  // p1
  int label = 0;
};

// One report per window plus a pooled "All Windows" report (emitted first),
// windows ascending by start offset. Windows with no samples are skipped;
// single-class windows keep accuracy only.
std::vector<MetricsReport> evaluate_by_window(
    const std::vector<ScoredSample>& samples, double threshold);

// Fills roc/prc on top of confusion_and_rates for one pooled slice.
MetricsReport full_report(const std::string& slice_id,
                          const std::vector<double>& scores,
                          const std::vector<int>& labels, double threshold);

// Rendering. Columns: gap, n0, n1, accuracy, F1, ROC-AUC, PRC-AUC.
// Undefined cells print "-".
std::string reports_to_table(const std::vector<MetricsReport>& reports);
std::string reports_to_csv(const std::vector<MetricsReport>& reports);
std::string report_to_text(const MetricsReport& report);
std::string curve_to_tsv(const ThresholdCurve& curve);

}  // namespace stancecast::eval
