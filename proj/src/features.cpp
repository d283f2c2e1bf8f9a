#include "stancecast/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "stancecast/embed.hpp"
#include "stancecast/eval.hpp"

namespace stancecast::features {

std::vector<double> EngineeredFeatures::as_vector() const {
  return {static_cast<double>(n_tweets),
          static_cast<double>(n_retweets),
          static_cast<double>(n_replies),
          static_cast<double>(n_quotes),
          share_retweets,
          share_replies,
          share_quotes,
          median_favorites,
          median_retweets,
          median_replies,
          median_quotes,
          static_cast<double>(active_days),
          static_cast<double>(verified),
          mean_sentiment,
          static_cast<double>(antivax_retweet_count),
          antivax_retweet_share,
          static_cast<double>(url_conspiracy_count),
          static_cast<double>(url_questionable_count),
          static_cast<double>(url_proscience_count)};
}

std::set<std::string> load_account_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open account list: " + path);
  std::set<std::string> accounts;
  std::string line;
  while (std::getline(in, line)) {
    std::string id = trim(line);
    if (id.empty() || id[0] == '#') continue;
    accounts.insert(id);
  }
  return accounts;
}

DomainRatingTable load_domain_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open domain ratings: " + path);
  DomainRatingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line);
    if (row.empty() || row[0] == '#') continue;
    auto fields = split_char(row, ',');
    if (fields.size() != 2)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `hostname,category`");
    std::string host = lowercase_ascii(trim(fields[0]));
    std::string cat = lowercase_ascii(trim(fields[1]));
    if (host == "hostname" && cat == "category") continue;  // header
    DomainCategory category;
    if (cat == "conspiracy_pseudoscience")
      category = DomainCategory::kConspiracyPseudoscience;
    else if (cat == "questionable")
      category = DomainCategory::kQuestionable;
    else if (cat == "pro_science")
      category = DomainCategory::kProScience;
    else
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unknown category '" + cat + "'");
    table.by_hostname[host] = category;
  }
  return table;
}

ValenceLexicon load_valence_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open valence lexicon: " + path);
  ValenceLexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line);
    if (row.empty() || row[0] == '#') continue;
    auto fields = split_char(row, ',');
    if (fields.size() != 2)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `token,score`");
    std::string token = lowercase_ascii(trim(fields[0]));
    std::string score_str = trim(fields[1]);
    if (token == "token" && lowercase_ascii(score_str) == "score") continue;
    char* end = nullptr;
    double score = std::strtod(score_str.c_str(), &end);
    if (end == score_str.c_str() || *end != '\0' || score < -1.0 ||
        score > 1.0)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": score must be a number in [-1, 1]");
    lexicon[token] = score;
  }
  return lexicon;
}

std::string url_hostname(const std::string& url) {
  std::string s = trim(url);
  auto scheme = s.find("://");
  if (scheme != std::string::npos) s = s.substr(scheme + 3);
  auto path_start = s.find_first_of("/?#");
  if (path_start != std::string::npos) s = s.substr(0, path_start);
  auto at = s.rfind('@');
  if (at != std::string::npos) s = s.substr(at + 1);
  auto port = s.find(':');
  if (port != std::string::npos) s = s.substr(0, port);
  return lowercase_ascii(s);
}

bool hostname_matches(const std::string& hostname, const std::string& rated) {
  if (rated.empty() || hostname.size() < rated.size()) return false;
  if (hostname == rated) return true;
  return hostname.size() > rated.size() &&
         hostname[hostname.size() - rated.size() - 1] == '.' &&
         hostname.compare(hostname.size() - rated.size(), rated.size(),
                          rated) == 0;
}

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

EngineeredFeatures extract_features(
    const std::vector<corpus::Tweet>& tweets_in_window, bool verified,
    const ValenceLexicon& valence_lexicon,
    const std::set<std::string>& antivax_accounts,
    const DomainRatingTable& ratings) {
  EngineeredFeatures f;
  f.verified = verified ? 1 : 0;
  if (tweets_in_window.empty()) return f;

  f.n_tweets = static_cast<std::int64_t>(tweets_in_window.size());

  std::vector<double> favorites, retweets, replies, quotes;
  std::set<std::int64_t> days;
  double sentiment_sum = 0.0;

  for (const auto& t : tweets_in_window) {
    // Exclusive share categories: quote beats retweet beats reply.
    if (t.is_quote)
      ++f.n_quotes;
    else if (t.is_retweet)
      ++f.n_retweets;
    else if (t.is_reply)
      ++f.n_replies;

    favorites.push_back(static_cast<double>(t.favorites));
    retweets.push_back(static_cast<double>(t.retweets));
    replies.push_back(static_cast<double>(t.replies));
    quotes.push_back(static_cast<double>(t.quotes));
    days.insert(floor_div(t.created_at, 86400));

    auto tokens = embed::tokenize(t.text);
    if (!tokens.empty()) {
      double valence = 0.0;
      for (const auto& token : tokens) {
        auto it = valence_lexicon.find(token);
        if (it != valence_lexicon.end()) valence += it->second;
      }
      sentiment_sum += valence / static_cast<double>(tokens.size());
    }

    if (t.retweeted_account_id &&
        antivax_accounts.count(*t.retweeted_account_id))
      ++f.antivax_retweet_count;

    for (const auto& url : t.urls) {
      std::string host = url_hostname(url);
      if (host.empty()) continue;
      // Most specific (longest) rated suffix wins.
      const std::string* best = nullptr;
      DomainCategory best_cat{};
      for (const auto& [rated, cat] : ratings.by_hostname) {
        if (!hostname_matches(host, rated)) continue;
        if (!best || rated.size() > best->size()) {
          best = &rated;
          best_cat = cat;
        }
      }
      if (!best) continue;
      switch (best_cat) {
        case DomainCategory::kConspiracyPseudoscience:
          ++f.url_conspiracy_count;
          break;
        case DomainCategory::kQuestionable:
          ++f.url_questionable_count;
          break;
        case DomainCategory::kProScience:
          ++f.url_proscience_count;
          break;
      }
    }
  }

  const double n = static_cast<double>(f.n_tweets);
  f.share_retweets = static_cast<double>(f.n_retweets) / n;
  f.share_replies = static_cast<double>(f.n_replies) / n;
  f.share_quotes = static_cast<double>(f.n_quotes) / n;
  f.median_favorites = median(std::move(favorites));
  f.median_retweets = median(std::move(retweets));
  f.median_replies = median(std::move(replies));
  f.median_quotes = median(std::move(quotes));
  f.active_days = static_cast<std::int64_t>(days.size());
  f.mean_sentiment = std::clamp(sentiment_sum / n, -1.0, 1.0);
  f.antivax_retweet_share = static_cast<double>(f.antivax_retweet_count) / n;
  return f;
}

std::vector<double> Standardizer::apply(const std::vector<double>& v) const {
  if (v.size() != mean.size())
    throw DataError("standardizer: feature length mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = (v[i] - mean[i]) / stdev[i];
  return out;
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DataError("standardizer: no training rows");
  const std::size_t k = rows[0].size();
  Standardizer s;
  s.mean.assign(k, 0.0);
  s.stdev.assign(k, 0.0);
  for (const auto& row : rows) {
    if (row.size() != k) throw DataError("standardizer: ragged feature rows");
    for (std::size_t i = 0; i < k; ++i) s.mean[i] += row[i];
  }
  for (auto& m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto& row : rows)
    for (std::size_t i = 0; i < k; ++i) {
      double d = row[i] - s.mean[i];
      s.stdev[i] += d * d;
    }
  for (auto& v : s.stdev) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (v == 0.0) v = 1.0;  // constant column passes through centered
  }
  return s;
}

std::string AblationReport::to_text() const {
  std::ostringstream out;
  out << "ablation slice: " << slice_id << "\n";
  out << "metric        with      without   delta     flag\n";
  for (const auto& m : metrics) {
    out << m.name;
    for (std::size_t i = m.name.size(); i < 14; ++i) out << ' ';
    out << format_double(m.with_features, 4) << "    "
        << format_double(m.without_features, 4) << "    "
        << format_double(m.delta, 4) << "   "
        << (m.flagged ? "non-negligible" : "-") << "\n";
  }
  out << "verdict: " << verdict << "\n";
  return out.str();
}

AblationReport ablation_report(const eval::MetricsReport& with_features,
                               const eval::MetricsReport& without_features) {
  if (with_features.slice_id != without_features.slice_id)
    throw DataError("ablation_report: slice mismatch ('" +
                    with_features.slice_id + "' vs '" +
                    without_features.slice_id + "')");
  AblationReport report;
  report.slice_id = with_features.slice_id;
  auto add = [&](const char* name, double a, double b) {
    MetricPair p;
    p.name = name;
    p.with_features = a;
    p.without_features = b;
    p.delta = a - b;
    // Slack absorbs subtraction noise so a decimal delta of exactly 0.01
    // stays unflagged.
    p.flagged = std::fabs(p.delta) > 0.01 + 1e-9;
    report.metrics.push_back(p);
  };
  add("accuracy", with_features.accuracy, without_features.accuracy);
  add("f1", with_features.f1, without_features.f1);
  add("roc_auc", with_features.roc_auc, without_features.roc_auc);
  add("prc_auc", with_features.prc_auc, without_features.prc_auc);
  bool any = false;
  for (const auto& m : report.metrics) any = any || m.flagged;
  report.verdict = any ? "non-negligible" : "negligible";
  return report;
}

}  // namespace stancecast::features
