#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stancecast/common.hpp"
#include "stancecast/embed.hpp"

// Corpus analysis: class-conditional word frequencies, emotion-lexicon
// profiles, moral-axis bias/intensity scoring and Mann-Whitney U tests.

namespace stancecast::textlab {

struct TokenFrequency {
  std::string token;
  std::int64_t count_class0 = 0;
  std::int64_t count_class1 = 0;
  double rate_class0 = 0.0;  // per million tokens
  double rate_class1 = 0.0;
  double skew = 0.0;  // log((rate1 + s) / (rate0 + s))
};

struct FrequencyComparison {
  std::int64_t total_tokens_class0 = 0;
  std::int64_t total_tokens_class1 = 0;
  std::vector<TokenFrequency> by_abs_skew;  // |skew| descending
  std::vector<TokenFrequency> by_max_rate;  // max(rate0, rate1) descending
};

// Tokens below min_count in both classes are dropped. Smoothing s is in
// per-million-token units. Fatal on an empty corpus.
FrequencyComparison frequency_compare(
    const std::vector<std::string>& docs_class0,
    const std::vector<std::string>& docs_class1, std::int64_t min_count,
    double smoothing);

inline constexpr std::array<const char*, 10> kEmotionCategories = {
    "anger",    "anticipation", "disgust",  "fear",     "joy",
    "sadness",  "surprise",     "trust",    "negative", "positive"};

// token -> set of category indices into kEmotionCategories.
using EmotionLexicon = std::map<std::string, std::set<std::size_t>>;

// File rows: `token,category`. Unknown categories are fatal.
EmotionLexicon load_emotion_lexicon(const std::string& path);

struct EmotionProfile {
  // Mean per-document score per category, and the per-document score lists
  // kept for significance testing.
  std::array<double, 10> mean{};
  std::array<std::vector<double>, 10> per_document;
};

// Per-document score = matched-token count (with multiplicity) / token
// count; empty documents score 0 in every category.
EmotionProfile emotion_profile(const std::vector<std::string>& docs,
                               const EmotionLexicon& lexicon);

struct MoralAxis {
  std::string foundation;  // loyalty, care, sanctity, authority, fairness
  std::vector<std::string> positive_pole;
  std::vector<std::string> negative_pole;
  std::vector<double> axis;  // mean(positive vectors) - mean(negative vectors)
};

// Fatal when poles overlap, a pole has no in-vocabulary word, or the axis
// vector is zero.
MoralAxis make_axis(const std::string& foundation,
                    const std::vector<std::string>& positive_pole,
                    const std::vector<std::string>& negative_pole,
                    const embed::WordVectorTable& table);

// File rows: `foundation,pole{+|-},word`. Returns axes in file order of
// first appearance.
std::vector<MoralAxis> load_axes(const std::string& path,
                                 const embed::WordVectorTable& table);

// Token-count-weighted mean cosine of the pooled corpus against the axis.
// Fatal when no document token is in vocabulary.
double background_bias(const std::vector<std::string>& corpus,
                       const MoralAxis& axis,
                       const embed::WordVectorTable& table);

struct MoralScore {
  double bias = 0.0;       // in [-1, 1]
  double intensity = 0.0;  // >= 0
  bool no_vocab = false;   // no in-vocabulary token; both fields are 0
};

// bias = sum c_w cos(v_w, axis) / sum c_w over in-vocabulary tokens;
// intensity = sum c_w (cos - background)^2 / sum c_w.
MoralScore frameaxis_score(const std::string& doc, const MoralAxis& axis,
                           const embed::WordVectorTable& table,
                           double background);

struct MwuResult {
  double u_a = 0.0;     // U statistic of the first sample
  double p_value = 1.0; // two-sided
  bool exact = false;   // exact enumeration (n_a + n_b <= 16) vs normal approx
};

// Midranks for ties. Exact path: two-sided p = min(1, 2 * min tail).
// Approximate path: tie-corrected variance, 0.5 continuity correction;
// degenerate variance gives p = 1.
MwuResult mann_whitney_u(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b);

struct ComparisonRow {
  std::string name;          // category or foundation
  double median_class0 = 0.0;
  double median_class1 = 0.0;
  double u_statistic = 0.0;
  double p_value = 1.0;
  std::string direction;     // "class0", "class1" or "none"
};

// Per-name medians, U statistic and p-value over per-document score lists.
// Direction = class with the higher median; "none" on equal medians.
std::vector<ComparisonRow> class_comparison_report(
    const std::vector<std::string>& names,
    const std::vector<std::vector<double>>& scores_class0,
    const std::vector<std::vector<double>>& scores_class1);

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

}  // namespace stancecast::textlab
