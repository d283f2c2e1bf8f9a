#include "stancecast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace stancecast::eval {

namespace {

void check_inputs(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("metrics: scores/labels length mismatch (" +
                    std::to_string(scores.size()) + " vs " +
                    std::to_string(labels.size()) + ")");
  if (scores.empty()) throw DataError("metrics: no samples");
}

// Midranks of `scores` (average rank within tie groups, 1-based).
std::vector<double> midranks(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

MetricsReport confusion_and_rates(const std::vector<double>& scores,
                                  const std::vector<int>& labels,
                                  double threshold) {
  check_inputs(scores, labels);
  MetricsReport r;
  r.threshold_used = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1)
      pred ? ++r.tp : ++r.fn;
    else
      pred ? ++r.fp : ++r.tn;
  }
  r.n_class0 = r.tn + r.fp;
  r.n_class1 = r.tp + r.fn;
  const double total = static_cast<double>(scores.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  if (r.tp + r.fp > 0)
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  else
    r.precision_flagged = true;
  if (r.tp + r.fn > 0)
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  else
    r.recall_flagged = true;
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else
    r.f1_flagged = true;
  return r;
}

double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  check_inputs(scores, labels);
  std::int64_t n1 = 0;
  for (int y : labels) n1 += (y == 1);
  const std::int64_t n0 = static_cast<std::int64_t>(labels.size()) - n1;
  if (n0 == 0 || n1 == 0)
    throw DataError("roc_auc undefined: only one class present");

  const auto ranks = midranks(scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum_pos += ranks[i];
  const double u1 =
      rank_sum_pos - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u1 / (static_cast<double>(n0) * static_cast<double>(n1));
}

double prc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  check_inputs(scores, labels);
  std::int64_t total_pos = 0;
  for (int y : labels) total_pos += (y == 1);
  if (total_pos == 0)
    throw DataError("prc_auc undefined: no positive samples");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  // Average precision over descending-score cuts; equal scores form one cut.
  double ap = 0.0, prev_recall = 0.0;
  std::int64_t tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      ++seen;
      tp += (labels[idx[k]] == 1);
    }
    const double precision =
        static_cast<double>(tp) / static_cast<double>(seen);
    const double recall =
        static_cast<double>(tp) / static_cast<double>(total_pos);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return ap;
}

ThresholdCurve tune_threshold(const std::vector<double>& scores,
                              const std::vector<int>& labels,
                              double grid_step) {
  check_inputs(scores, labels);
  if (grid_step <= 0.0 || grid_step >= 1.0)
    throw UsageError("tune_threshold: grid step must be in (0, 1)");
  std::int64_t total_pos = 0;
  for (int y : labels) total_pos += (y == 1);
  if (total_pos == 0 || total_pos == static_cast<std::int64_t>(labels.size()))
    throw DataError("tune_threshold: need both classes present");

  std::vector<double> candidates;
  for (std::size_t i = 1;; ++i) {
    const double t = static_cast<double>(i) * grid_step;
    if (t > 1.0 - grid_step + 1e-12) break;
    candidates.push_back(t);
  }
  candidates.insert(candidates.end(), scores.begin(), scores.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  // Sorted scores + suffix positive counts make each F1 a binary search.
  std::vector<std::pair<double, int>> sorted;
  sorted.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    sorted.emplace_back(scores[i], labels[i]);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> pos_suffix(sorted.size() + 1, 0);
  for (std::size_t i = sorted.size(); i > 0; --i)
    pos_suffix[i - 1] = pos_suffix[i] + (sorted[i - 1].second == 1);

  ThresholdCurve curve;
  curve.grid = candidates;
  curve.f1_at.resize(candidates.size());
  double best_f1 = -1.0, best_t = 0.5;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double t = candidates[c];
    const auto it = std::lower_bound(
        sorted.begin(), sorted.end(), t,
        [](const std::pair<double, int>& s, double v) { return s.first < v; });
    const std::size_t first = static_cast<std::size_t>(it - sorted.begin());
    const std::int64_t predicted_pos =
        static_cast<std::int64_t>(sorted.size() - first);
    const std::int64_t tp = pos_suffix[first];
    const std::int64_t fp = predicted_pos - tp;
    const std::int64_t fn = total_pos - tp;
    double f1 = 0.0;
    if (2 * tp + fp + fn > 0)
      f1 = 2.0 * static_cast<double>(tp) /
           static_cast<double>(2 * tp + fp + fn);
    curve.f1_at[c] = f1;
    const bool better =
        f1 > best_f1 ||
        (f1 == best_f1 && (std::fabs(t - 0.5) < std::fabs(best_t - 0.5) ||
                           (std::fabs(t - 0.5) == std::fabs(best_t - 0.5) &&
                            t < best_t)));
    if (better) {
      best_f1 = f1;
      best_t = t;
    }
  }
  curve.best_f1 = best_f1;
  curve.best_threshold = best_t;
  return curve;
}

MetricsReport full_report(const std::string& slice_id,
                          const std::vector<double>& scores,
                          const std::vector<int>& labels, double threshold) {
  MetricsReport r = confusion_and_rates(scores, labels, threshold);
  r.slice_id = slice_id;
  if (r.n_class0 > 0 && r.n_class1 > 0) {
    r.roc_auc = roc_auc(scores, labels);
    r.prc_auc = prc_auc(scores, labels);
  } else {
    r.roc_auc_defined = false;
    r.prc_auc_defined = false;
  }
  return r;
}

std::vector<MetricsReport> evaluate_by_window(
    const std::vector<ScoredSample>& samples, double threshold) {
  if (samples.empty()) throw DataError("evaluate_by_window: no samples");
  std::vector<MetricsReport> reports;

  std::vector<double> all_scores;
  std::vector<int> all_labels;
  for (const auto& s : samples) {
    all_scores.push_back(s.score);
    all_labels.push_back(s.label);
  }
  reports.push_back(
      full_report("All Windows", all_scores, all_labels, threshold));

  for (const auto& spec : corpus::window_specs()) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : samples) {
      if (s.window.start_days != spec.start_days ||
          s.window.end_days != spec.end_days)
        continue;
      scores.push_back(s.score);
      labels.push_back(s.label);
    }
    if (scores.empty()) continue;
    reports.push_back(full_report(spec.name(), scores, labels, threshold));
  }
  return reports;
}

namespace {

// F1/ROC/PRC cells are only meaningful with both classes present.
bool two_classes(const MetricsReport& r) {
  return r.n_class0 > 0 && r.n_class1 > 0;
}

std::string cell(double v, bool defined) {
  return defined ? format_double(v, 4) : "-";
}

}  // namespace

std::string reports_to_table(const std::vector<MetricsReport>& reports) {
  const std::vector<std::string> header = {"gap",      "n0",      "n1",
                                           "accuracy", "f1",      "roc_auc",
                                           "prc_auc"};
  std::vector<std::vector<std::string>> rows;
  rows.push_back(header);
  for (const auto& r : reports) {
    rows.push_back({r.slice_id, std::to_string(r.n_class0),
                    std::to_string(r.n_class1), format_double(r.accuracy, 4),
                    cell(r.f1, two_classes(r)),
                    cell(r.roc_auc, r.roc_auc_defined),
                    cell(r.prc_auc, r.prc_auc_defined)});
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      // Left-align the gap column, right-align numbers.
      if (c == 0) {
        out << row[c];
        out << std::string(widths[c] - row[c].size(), ' ');
      } else {
        out << std::string(widths[c] - row[c].size(), ' ');
        out << row[c];
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string reports_to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "gap,n0,n1,accuracy,f1,roc_auc,prc_auc\n";
  for (const auto& r : reports) {
    out << r.slice_id << "," << r.n_class0 << "," << r.n_class1 << ","
        << format_double(r.accuracy, 4) << ","
        << (two_classes(r) ? format_double(r.f1, 4) : "") << ","
        << (r.roc_auc_defined ? format_double(r.roc_auc, 4) : "") << ","
        << (r.prc_auc_defined ? format_double(r.prc_auc, 4) : "") << "\n";
  }
  return out.str();
}

std::string report_to_text(const MetricsReport& report) {
  std::ostringstream out;
  out << "slice: " << report.slice_id << "\n"
      << "n_class0: " << report.n_class0 << "\n"
      << "n_class1: " << report.n_class1 << "\n"
      << "threshold: " << format_double(report.threshold_used, 6) << "\n"
      << "accuracy: " << format_double(report.accuracy, 4) << "\n"
      << "precision: " << format_double(report.precision, 4)
      << (report.precision_flagged ? " (no predicted positives)" : "") << "\n"
      << "recall: " << format_double(report.recall, 4)
      << (report.recall_flagged ? " (no positive labels)" : "") << "\n"
      << "f1: " << format_double(report.f1, 4)
      << (report.f1_flagged ? " (undefined, reported as 0)" : "") << "\n"
      << "roc_auc: " << cell(report.roc_auc, report.roc_auc_defined) << "\n"
      << "prc_auc: " << cell(report.prc_auc, report.prc_auc_defined) << "\n"
      << "confusion: tn=" << report.tn << " fp=" << report.fp
      << " fn=" << report.fn << " tp=" << report.tp << "\n";
  return out.str();
}

std::string curve_to_tsv(const ThresholdCurve& curve) {
  std::ostringstream out;
  out << "# best_threshold=" << format_double(curve.best_threshold, 6)
      << " best_f1=" << format_double(curve.best_f1, 6) << "\n";
  out << "threshold\tf1\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    out << format_double(curve.grid[i], 6) << "\t"
        << format_double(curve.f1_at[i], 6) << "\n";
  return out.str();
}

}  // namespace stancecast::eval
