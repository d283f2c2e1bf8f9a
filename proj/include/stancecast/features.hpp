#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stancecast/common.hpp"
#include "stancecast/corpus.hpp"

// Engineered per-window account features. Kept for ablation runs; the
// shipped classifier uses embeddings only.

namespace stancecast::eval {
struct MetricsReport;
}

namespace stancecast::features {

struct EngineeredFeatures {
  std::int64_t n_tweets = 0;
  std::int64_t n_retweets = 0;
  std::int64_t n_replies = 0;
  std::int64_t n_quotes = 0;
  double share_retweets = 0.0;
  double share_replies = 0.0;
  double share_quotes = 0.0;
  double median_favorites = 0.0;
  double median_retweets = 0.0;
  double median_replies = 0.0;
  double median_quotes = 0.0;
  std::int64_t active_days = 0;
  int verified = 0;
  double mean_sentiment = 0.0;  // in [-1, 1]
  std::int64_t antivax_retweet_count = 0;
  double antivax_retweet_share = 0.0;
  std::int64_t url_conspiracy_count = 0;
  std::int64_t url_questionable_count = 0;
  std::int64_t url_proscience_count = 0;

  // Fixed-order dense vector of all 19 fields, for model input.
  std::vector<double> as_vector() const;
};

inline constexpr std::size_t kFeatureCount = 19;

enum class DomainCategory { kConspiracyPseudoscience, kQuestionable, kProScience };

struct DomainRatingTable {
  std::map<std::string, DomainCategory> by_hostname;  // lowercase hostnames
};

using ValenceLexicon = std::map<std::string, double>;  // token -> [-1, 1]

// File loaders. Formats: one account_id per line; `hostname,category` rows
// with category in {conspiracy_pseudoscience, questionable, pro_science};
// `token,score` rows with score in [-1, 1].
std::set<std::string> load_account_set(const std::string& path);
DomainRatingTable load_domain_ratings(const std::string& path);
ValenceLexicon load_valence_lexicon(const std::string& path);

// Hostname of a URL, lowercased, without port or userinfo. Empty when the
// URL has no parseable host.
std::string url_hostname(const std::string& url);

// True when hostname equals `rated` or ends with "." + rated.
bool hostname_matches(const std::string& hostname, const std::string& rated);

EngineeredFeatures extract_features(
    const std::vector<corpus::Tweet>& tweets_in_window, bool verified,
    const ValenceLexicon& valence_lexicon,
    const std::set<std::string>& antivax_accounts,
    const DomainRatingTable& ratings);

// Train-split standardization for the ablation configuration.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;  // 1 where the train column is constant

  std::vector<double> apply(const std::vector<double>& v) const;
};

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows);

// Side-by-side metric deltas; |delta| > 0.01 on any metric flips the verdict
// to "non-negligible". Fatal when the reports cover different slices.
struct MetricPair {
  std::string name;
  double with_features = 0.0;
  double without_features = 0.0;
  double delta = 0.0;
  bool flagged = false;
};

struct AblationReport {
  std::string slice_id;
  std::vector<MetricPair> metrics;
  std::string verdict;  // "negligible" or "non-negligible"
  std::string to_text() const;
};

AblationReport ablation_report(const eval::MetricsReport& with_features,
                               const eval::MetricsReport& without_features);

}  // namespace stancecast::features
