#include "stancecast/textlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace stancecast::textlab {

namespace {

std::map<std::string, std::int64_t> count_tokens(
    const std::vector<std::string>& docs, std::int64_t& total) {
  std::map<std::string, std::int64_t> counts;
  total = 0;
  for (const auto& doc : docs)
    for (const auto& token : embed::tokenize(doc)) {
      ++counts[token];
      ++total;
    }
  return counts;
}

}  // namespace

FrequencyComparison frequency_compare(
    const std::vector<std::string>& docs_class0,
    const std::vector<std::string>& docs_class1, std::int64_t min_count,
    double smoothing) {
  if (docs_class0.empty() || docs_class1.empty())
    throw DataError("frequency_compare: both corpora must be non-empty");

  FrequencyComparison out;
  auto counts0 = count_tokens(docs_class0, out.total_tokens_class0);
  auto counts1 = count_tokens(docs_class1, out.total_tokens_class1);
  if (out.total_tokens_class0 == 0 || out.total_tokens_class1 == 0)
    throw DataError("frequency_compare: a class has no tokens");

  const double per_million0 = 1e6 / static_cast<double>(out.total_tokens_class0);
  const double per_million1 = 1e6 / static_cast<double>(out.total_tokens_class1);

  std::vector<TokenFrequency> rows;
  auto emit = [&](const std::string& token, std::int64_t c0, std::int64_t c1) {
    if (c0 < min_count && c1 < min_count) return;
    TokenFrequency f;
    f.token = token;
    f.count_class0 = c0;
    f.count_class1 = c1;
    f.rate_class0 = static_cast<double>(c0) * per_million0;
    f.rate_class1 = static_cast<double>(c1) * per_million1;
    f.skew = std::log((f.rate_class1 + smoothing) / (f.rate_class0 + smoothing));
    rows.push_back(std::move(f));
  };
  for (const auto& [token, c0] : counts0) {
    auto it = counts1.find(token);
    emit(token, c0, it == counts1.end() ? 0 : it->second);
  }
  for (const auto& [token, c1] : counts1)
    if (!counts0.count(token)) emit(token, 0, c1);

  out.by_abs_skew = rows;
  std::sort(out.by_abs_skew.begin(), out.by_abs_skew.end(),
            [](const TokenFrequency& a, const TokenFrequency& b) {
              const double sa = std::fabs(a.skew), sb = std::fabs(b.skew);
              if (sa != sb) return sa > sb;
              return a.token < b.token;
            });
  out.by_max_rate = std::move(rows);
  std::sort(out.by_max_rate.begin(), out.by_max_rate.end(),
            [](const TokenFrequency& a, const TokenFrequency& b) {
              const double ra = std::max(a.rate_class0, a.rate_class1);
              const double rb = std::max(b.rate_class0, b.rate_class1);
              if (ra != rb) return ra > rb;
              return a.token < b.token;
            });
  return out;
}

namespace {

std::size_t category_index(const std::string& name) {
  for (std::size_t i = 0; i < kEmotionCategories.size(); ++i)
    if (name == kEmotionCategories[i]) return i;
  return kEmotionCategories.size();
}

}  // namespace

EmotionLexicon load_emotion_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open emotion lexicon: " + path);
  EmotionLexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line);
    if (row.empty() || row[0] == '#') continue;
    auto fields = split_char(row, ',');
    if (fields.size() != 2)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `token,category`");
    std::string token = lowercase_ascii(trim(fields[0]));
    std::string category = lowercase_ascii(trim(fields[1]));
    if (token == "token" && category == "category") continue;  // header
    const std::size_t idx = category_index(category);
    if (idx == kEmotionCategories.size())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unknown category '" + category + "'");
    lexicon[token].insert(idx);
  }
  if (lexicon.empty()) throw DataError(path + ": emotion lexicon is empty");
  return lexicon;
}

EmotionProfile emotion_profile(const std::vector<std::string>& docs,
                               const EmotionLexicon& lexicon) {
  if (lexicon.empty()) throw DataError("emotion_profile: empty lexicon");
  EmotionProfile profile;
  for (auto& list : profile.per_document) list.reserve(docs.size());

  for (const auto& doc : docs) {
    const auto tokens = embed::tokenize(doc);
    std::array<double, 10> scores{};
    if (!tokens.empty()) {
      std::array<std::int64_t, 10> matches{};
      for (const auto& token : tokens) {
        auto it = lexicon.find(token);
        if (it == lexicon.end()) continue;
        for (std::size_t idx : it->second) ++matches[idx];
      }
      for (std::size_t c = 0; c < 10; ++c)
        scores[c] =
            static_cast<double>(matches[c]) / static_cast<double>(tokens.size());
    }
    for (std::size_t c = 0; c < 10; ++c)
      profile.per_document[c].push_back(scores[c]);
  }
  for (std::size_t c = 0; c < 10; ++c) {
    const auto& list = profile.per_document[c];
    profile.mean[c] =
        list.empty()
            ? 0.0
            : std::accumulate(list.begin(), list.end(), 0.0) /
                  static_cast<double>(list.size());
  }
  return profile;
}

namespace {

// Mean vector of the pole's in-vocabulary words; fatal when none match.
std::vector<double> pole_mean(const std::string& foundation,
                              const char* pole_name,
                              const std::vector<std::string>& words,
                              const embed::WordVectorTable& table) {
  std::vector<double> mean(table.dimension, 0.0);
  std::size_t matched = 0;
  for (const auto& word : words) {
    auto it = table.entries.find(lowercase_ascii(word));
    if (it == table.entries.end()) continue;
    for (std::size_t i = 0; i < table.dimension; ++i) mean[i] += it->second[i];
    ++matched;
  }
  if (matched == 0)
    throw DataError("axis '" + foundation + "': " + pole_name +
                    " pole has no in-vocabulary word");
  for (auto& v : mean) v /= static_cast<double>(matched);
  return mean;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Cosine against the axis; zero-norm word vectors count as out of
// vocabulary and must be filtered by the caller.
double cosine(const std::vector<double>& v, const std::vector<double>& axis,
              double axis_norm) {
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * axis[i];
  // Rounding can push |dot| a few ulps past the norms' product; clamping
  // keeps every bias inside [-1, 1].
  return std::clamp(dot / (norm(v) * axis_norm), -1.0, 1.0);
}

// Count in-vocabulary tokens of a doc, skipping zero-norm vectors.
std::map<std::string, std::int64_t> vocab_counts(
    const std::string& doc, const embed::WordVectorTable& table) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& token : embed::tokenize(doc)) {
    auto it = table.entries.find(token);
    if (it == table.entries.end() || norm(it->second) == 0.0) continue;
    ++counts[token];
  }
  return counts;
}

}  // namespace

MoralAxis make_axis(const std::string& foundation,
                    const std::vector<std::string>& positive_pole,
                    const std::vector<std::string>& negative_pole,
                    const embed::WordVectorTable& table) {
  if (foundation.empty()) throw DataError("axis needs a foundation name");
  for (const auto& p : positive_pole)
    for (const auto& n : negative_pole)
      if (lowercase_ascii(p) == lowercase_ascii(n))
        throw DataError("axis '" + foundation + "': pole lists share word '" +
                        lowercase_ascii(p) + "'");

  MoralAxis axis;
  axis.foundation = foundation;
  axis.positive_pole = positive_pole;
  axis.negative_pole = negative_pole;
  const auto pos = pole_mean(foundation, "positive", positive_pole, table);
  const auto neg = pole_mean(foundation, "negative", negative_pole, table);
  axis.axis.resize(table.dimension);
  for (std::size_t i = 0; i < table.dimension; ++i)
    axis.axis[i] = pos[i] - neg[i];
  if (norm(axis.axis) == 0.0)
    throw DataError("axis '" + foundation + "': pole means coincide, axis is zero");
  return axis;
}

std::vector<MoralAxis> load_axes(const std::string& path,
                                 const embed::WordVectorTable& table) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open axis file: " + path);

  static const std::set<std::string> kFoundations = {
      "loyalty", "care", "sanctity", "authority", "fairness"};

  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<std::string>,
                                  std::vector<std::string>>> poles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line);
    if (row.empty() || row[0] == '#') continue;
    auto fields = split_char(row, ',');
    if (fields.size() != 3)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `foundation,pole,word`");
    std::string foundation = lowercase_ascii(trim(fields[0]));
    std::string pole = trim(fields[1]);
    std::string word = lowercase_ascii(trim(fields[2]));
    if (foundation == "foundation" && lowercase_ascii(pole) == "pole")
      continue;  // header
    if (!kFoundations.count(foundation))
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unknown foundation '" + foundation + "'");
    if (pole != "+" && pole != "-")
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": pole must be '+' or '-'");
    if (!poles.count(foundation)) order.push_back(foundation);
    auto& [plus, minus] = poles[foundation];
    (pole == "+" ? plus : minus).push_back(word);
  }
  std::vector<MoralAxis> axes;
  for (const auto& foundation : order) {
    const auto& [plus, minus] = poles[foundation];
    axes.push_back(make_axis(foundation, plus, minus, table));
  }
  if (axes.empty()) throw DataError(path + ": axis file defines no axes");
  return axes;
}

double background_bias(const std::vector<std::string>& corpus,
                       const MoralAxis& axis,
                       const embed::WordVectorTable& table) {
  if (corpus.empty()) throw DataError("background_bias: empty corpus");
  const double axis_norm = norm(axis.axis);

  double weighted = 0.0;
  std::int64_t total = 0;
  std::map<std::string, std::int64_t> pooled;
  for (const auto& doc : corpus)
    for (const auto& [token, count] : vocab_counts(doc, table))
      pooled[token] += count;
  for (const auto& [token, count] : pooled) {
    weighted += static_cast<double>(count) *
                cosine(table.entries.at(token), axis.axis, axis_norm);
    total += count;
  }
  if (total == 0)
    throw DataError("background_bias: corpus has no in-vocabulary token");
  return weighted / static_cast<double>(total);
}

MoralScore frameaxis_score(const std::string& doc, const MoralAxis& axis,
                           const embed::WordVectorTable& table,
                           double background) {
  MoralScore score;
  const auto counts = vocab_counts(doc, table);
  if (counts.empty()) {
    score.no_vocab = true;
    return score;
  }
  const double axis_norm = norm(axis.axis);
  double bias_sum = 0.0, intensity_sum = 0.0;
  std::int64_t total = 0;
  for (const auto& [token, count] : counts) {
    const double c = cosine(table.entries.at(token), axis.axis, axis_norm);
    const double w = static_cast<double>(count);
    bias_sum += w * c;
    intensity_sum += w * (c - background) * (c - background);
    total += count;
  }
  score.bias = bias_sum / static_cast<double>(total);
  score.intensity = intensity_sum / static_cast<double>(total);
  return score;
}

namespace {

double normal_sf_two_sided(double z_abs) {
  // 2 * (1 - Phi(z)) = erfc(z / sqrt(2)).
  return std::erfc(z_abs / std::sqrt(2.0));
}

}  // namespace

MwuResult mann_whitney_u(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b) {
  if (sample_a.empty() || sample_b.empty())
    throw DataError("mann_whitney_u: both samples must be non-empty");
  const std::size_t na = sample_a.size(), nb = sample_b.size();
  const std::size_t n = na + nb;

  std::vector<double> combined;
  combined.reserve(n);
  combined.insert(combined.end(), sample_a.begin(), sample_a.end());
  combined.insert(combined.end(), sample_b.begin(), sample_b.end());

  // Midranks over the combined sample.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return combined[a] < combined[b];
  });
  std::vector<double> ranks(n, 0.0);
  double tie_sum = 0.0;  // sum of t^3 - t over tie groups
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && combined[idx[j + 1]] == combined[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mid;
    const double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }

  double rank_sum_a = 0.0;
  for (std::size_t k = 0; k < na; ++k) rank_sum_a += ranks[k];
  const double u_a =
      rank_sum_a - 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);

  MwuResult result;
  result.u_a = u_a;

  if (n <= 16) {
    // Exact permutation distribution of U over all C(n, na) assignments of
    // the observed (mid)ranks to group A.
    result.exact = true;
    std::vector<double> sorted_ranks(n);
    for (std::size_t k = 0; k < n; ++k) sorted_ranks[k] = ranks[idx[k]];
    std::vector<std::size_t> comb(na);
    std::iota(comb.begin(), comb.end(), 0);
    const double offset =
        0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
    std::int64_t count_le = 0, count_ge = 0, count_total = 0;
    for (;;) {
      double u = -offset;
      for (std::size_t c : comb) u += sorted_ranks[c];
      if (u <= u_a + 1e-9) ++count_le;
      if (u >= u_a - 1e-9) ++count_ge;
      ++count_total;
      // Next combination in lexicographic order.
      std::size_t k = na;
      while (k > 0 && comb[k - 1] == k - 1 + n - na) --k;
      if (k == 0) break;
      ++comb[k - 1];
      for (std::size_t m = k; m < na; ++m) comb[m] = comb[m - 1] + 1;
    }
    const double tail = static_cast<double>(std::min(count_le, count_ge)) /
                        static_cast<double>(count_total);
    result.p_value = std::min(1.0, 2.0 * tail);
    return result;
  }

  const double mu = 0.5 * static_cast<double>(na) * static_cast<double>(nb);
  const double nn = static_cast<double>(n);
  const double variance = static_cast<double>(na) * static_cast<double>(nb) /
                          12.0 * ((nn + 1.0) - tie_sum / (nn * (nn - 1.0)));
  const double sd = variance > 0.0 ? std::sqrt(variance) : 0.0;
  if (sd <= 0.0) {
    result.p_value = 1.0;  // all values tied
    return result;
  }
  double z = 0.0;
  if (u_a > mu)
    z = (u_a - mu - 0.5) / sd;  // continuity correction toward the mean
  else if (u_a < mu)
    z = (u_a - mu + 0.5) / sd;
  result.p_value = std::min(1.0, normal_sf_two_sided(std::fabs(z)));
  return result;
}

namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string format_general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::vector<ComparisonRow> class_comparison_report(
    const std::vector<std::string>& names,
    const std::vector<std::vector<double>>& scores_class0,
    const std::vector<std::vector<double>>& scores_class1) {
  if (names.size() != scores_class0.size() ||
      names.size() != scores_class1.size())
    throw DataError("class_comparison_report: names/scores length mismatch");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ComparisonRow row;
    row.name = names[i];
    row.median_class0 = median_of(scores_class0[i]);
    row.median_class1 = median_of(scores_class1[i]);
    const auto mwu = mann_whitney_u(scores_class0[i], scores_class1[i]);
    row.u_statistic = mwu.u_a;
    row.p_value = mwu.p_value;
    if (row.median_class1 > row.median_class0)
      row.direction = "class1";
    else if (row.median_class1 < row.median_class0)
      row.direction = "class0";
    else
      row.direction = "none";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "name,median_class0,median_class1,u_statistic,p_value,direction\n";
  for (const auto& r : rows)
    out << r.name << "," << format_double(r.median_class0, 6) << ","
        << format_double(r.median_class1, 6) << ","
        << format_double(r.u_statistic, 1) << "," << format_general(r.p_value)
        << "," << r.direction << "\n";
  return out.str();
}

}  // namespace stancecast::textlab
