#include "stancecast/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace stancecast::corpus {

using nlohmann::json;

std::string WindowSpec::name() const {
  return "[" + std::to_string(start_days) + "-" + std::to_string(end_days) +
         ")";
}

const std::array<WindowSpec, 7>& window_specs() {
  static const std::array<WindowSpec, 7> specs = {{{0, 90},
                                                   {60, 150},
                                                   {120, 210},
                                                   {180, 270},
                                                   {240, 330},
                                                   {300, 390},
                                                   {360, 450}}};
  return specs;
}

std::string DatasetSplit::slice_of(const std::string& account_id) const {
  if (std::binary_search(train.begin(), train.end(), account_id))
    return "train";
  if (std::binary_search(validation.begin(), validation.end(), account_id))
    return "validation";
  if (std::binary_search(test.begin(), test.end(), account_id)) return "test";
  return "";
}

namespace {

struct LabelEntry {
  int label = 0;
  std::optional<std::int64_t> labeling_date;
};

std::unordered_map<std::string, LabelEntry> read_labels(
    const std::string& path, IngestStats& stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file: " + path);

  std::unordered_map<std::string, LabelEntry> labels;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto fields = split_char(line, ',');
    if (!header_seen) {
      if (lowercase_ascii(trim(fields[0])) != "account_id")
        throw DataError(path + ":1: labels file must start with a header row "
                        "'account_id,label[,labeling_date]'");
      header_seen = true;
      continue;
    }
    if (fields.size() < 2) {
      stats.warnings.push_back(path + ":" + std::to_string(line_no) +
                               ": expected at least 2 fields");
      ++stats.malformed_lines;
      continue;
    }
    LabelEntry entry;
    std::string id = trim(fields[0]);
    std::string label_str = trim(fields[1]);
    if (id.empty() || (label_str != "0" && label_str != "1")) {
      stats.warnings.push_back(path + ":" + std::to_string(line_no) +
                               ": label must be 0 or 1");
      ++stats.malformed_lines;
      continue;
    }
    entry.label = label_str == "1" ? 1 : 0;
    if (fields.size() >= 3 && !trim(fields[2]).empty()) {
      auto ts = parse_iso8601(fields[2]);
      if (!ts) {
        stats.warnings.push_back(path + ":" + std::to_string(line_no) +
                                 ": unparsable labeling_date '" +
                                 trim(fields[2]) + "'");
        ++stats.malformed_lines;
        continue;
      }
      entry.labeling_date = *ts;
    }
    labels[id] = entry;
  }
  if (!header_seen)
    throw DataError(path + ": labels file is empty or has no header row");
  return labels;
}

std::optional<Tweet> parse_tweet_line(const std::string& line,
                                      const std::string& path,
                                      std::size_t line_no,
                                      IngestStats& stats) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    stats.warnings.push_back(path + ":" + std::to_string(line_no) + ": " +
                             e.what());
    ++stats.malformed_lines;
    return std::nullopt;
  }
  auto warn = [&](const std::string& msg) {
    stats.warnings.push_back(path + ":" + std::to_string(line_no) + ": " +
                             msg);
  };
  if (!j.is_object() || !j.contains("tweet_id") || !j.contains("account_id") ||
      !j.contains("created_at") || !j.contains("text")) {
    warn("missing required field (tweet_id, account_id, created_at, text)");
    ++stats.malformed_lines;
    return std::nullopt;
  }
  Tweet t;
  try {
    t.tweet_id = j.at("tweet_id").get<std::string>();
    t.account_id = j.at("account_id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    auto ts = parse_iso8601(j.at("created_at").get<std::string>());
    if (!ts) {
      warn("unparsable created_at '" +
           j.at("created_at").get<std::string>() + "'");
      ++stats.bad_timestamps;
      return std::nullopt;
    }
    t.created_at = *ts;
    t.is_retweet = j.value("is_retweet", false);
    if (j.contains("retweeted_account_id") &&
        !j.at("retweeted_account_id").is_null())
      t.retweeted_account_id = j.at("retweeted_account_id").get<std::string>();
    t.favorites = j.value("favorites", std::int64_t{0});
    t.retweets = j.value("retweets", std::int64_t{0});
    t.replies = j.value("replies", std::int64_t{0});
    t.quotes = j.value("quotes", std::int64_t{0});
    if (j.contains("urls"))
      t.urls = j.at("urls").get<std::vector<std::string>>();
    t.is_quote = j.value("is_quote", false);
    t.is_reply = j.value("is_reply", false);
  } catch (const json::exception& e) {
    warn(e.what());
    ++stats.malformed_lines;
    return std::nullopt;
  }
  if (t.favorites < 0 || t.retweets < 0 || t.replies < 0 || t.quotes < 0) {
    warn("negative engagement count");
    ++stats.malformed_lines;
    return std::nullopt;
  }
  if (t.is_retweet != t.retweeted_account_id.has_value()) {
    warn("retweeted_account_id must be present iff is_retweet");
    ++stats.malformed_lines;
    return std::nullopt;
  }
  return t;
}

}  // namespace

std::map<std::string, std::vector<Tweet>> read_tweets(const std::string& path,
                                                      IngestStats& stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tweets file: " + path);

  std::map<std::string, std::vector<Tweet>> by_account;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto tweet = parse_tweet_line(line, path, line_no, stats);
    if (!tweet) continue;
    ++stats.tweets_read;
    by_account[tweet->account_id].push_back(std::move(*tweet));
  }
  for (auto& [id, tweets] : by_account)
    std::sort(tweets.begin(), tweets.end(),
              [](const Tweet& a, const Tweet& b) {
                if (a.created_at != b.created_at)
                  return a.created_at < b.created_at;
                return a.tweet_id < b.tweet_id;
              });
  return by_account;
}

IngestResult ingest_corpus(const std::string& tweets_path,
                           const std::string& labels_path) {
  IngestResult result;
  auto labels = read_labels(labels_path, result.stats);
  auto by_account = read_tweets(tweets_path, result.stats);

  for (const auto& [id, tweets] : by_account)
    if (!labels.count(id)) ++result.stats.accounts_not_in_labels;

  // labels is unordered; walk accounts in sorted order for determinism.
  std::vector<std::string> label_ids;
  label_ids.reserve(labels.size());
  for (const auto& [id, entry] : labels) label_ids.push_back(id);
  std::sort(label_ids.begin(), label_ids.end());

  for (const auto& id : label_ids) {
    auto it = by_account.find(id);
    if (it == by_account.end() || it->second.empty()) {
      ++result.stats.labeled_accounts_no_tweets;
      result.stats.warnings.push_back("labeled account '" + id +
                                      "' has no tweets; skipped");
      continue;
    }
    AccountRecord rec;
    rec.account_id = id;
    rec.label = labels[id].label;
    rec.explicit_labeling_date = labels[id].labeling_date;
    rec.tweets = std::move(it->second);
    result.accounts.push_back(std::move(rec));
  }
  return result;
}

bool contains_trigger(const std::string& text,
                      const std::set<std::string>& trigger_terms) {
  if (trigger_terms.empty()) return false;
  for (const auto& raw : split_whitespace(lowercase_ascii(text))) {
    // Trim surrounding punctuation but keep a leading '#'.
    std::size_t b = 0, e = raw.size();
    while (b < e && raw[b] != '#' &&
           !std::isalnum(static_cast<unsigned char>(raw[b])) &&
           !(static_cast<unsigned char>(raw[b]) >= 0x80))
      ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1])) &&
           !(static_cast<unsigned char>(raw[e - 1]) >= 0x80))
      --e;
    if (e <= b) continue;
    std::string token = raw.substr(b, e - b);
    if (trigger_terms.count(token)) return true;
    if (token.size() > 1 && token[0] == '#' &&
        trigger_terms.count(token.substr(1)))
      return true;
  }
  return false;
}

std::int64_t compute_labeling_date(
    const AccountRecord& record, const std::set<std::string>& trigger_terms) {
  if (record.tweets.empty())
    throw AccountRejected(record.account_id, "no tweets");
  if (record.explicit_labeling_date) return *record.explicit_labeling_date;

  if (record.label == 0) return record.tweets.back().created_at;

  for (const auto& tweet : record.tweets) {  // tweets are time-ordered
    if (contains_trigger(tweet.text, trigger_terms)) return tweet.created_at;
  }
  throw AccountRejected(record.account_id,
                        "label 1 but no trigger term found and no explicit "
                        "labeling_date given");
}

ResolveStats resolve_labeling_dates(std::vector<AccountRecord>& records,
                                    const std::set<std::string>& triggers) {
  ResolveStats stats;
  std::vector<AccountRecord> kept;
  kept.reserve(records.size());
  for (auto& rec : records) {
    if (rec.label == 0 && !triggers.empty()) {
      for (const auto& tweet : rec.tweets) {
        if (contains_trigger(tweet.text, triggers)) {
          ++stats.trigger_hits_in_label0;
          break;
        }
      }
    }
    try {
      rec.labeling_date = compute_labeling_date(rec, triggers);
    } catch (const AccountRejected&) {
      stats.rejected_accounts.push_back(rec.account_id);
      continue;
    }
    kept.push_back(std::move(rec));
  }
  records = std::move(kept);
  return stats;
}

std::vector<WindowSample> slice_windows(const AccountRecord& record) {
  if (!record.labeling_date)
    throw DataError("slice_windows: labeling date not resolved for account '" +
                    record.account_id + "'");
  const std::int64_t anchor = *record.labeling_date;

  std::vector<WindowSample> samples;
  for (const auto& spec : window_specs()) {
    std::string document;
    std::int64_t count = 0;
    for (const auto& tweet : record.tweets) {
      if (tweet.created_at >= anchor) continue;  // anti-leak rule
      std::int64_t offset_days = floor_div(anchor - tweet.created_at, 86400);
      if (offset_days < spec.start_days || offset_days >= spec.end_days)
        continue;
      if (count > 0) document += '\n';
      document += tweet.text;
      ++count;
    }
    if (count == 0) continue;  // empty windows yield no sample
    WindowSample sample;
    sample.account_id = record.account_id;
    sample.window = spec;
    sample.document = std::move(document);
    sample.tweet_count = count;
    sample.label = record.label;
    samples.push_back(std::move(sample));
  }
  return samples;
}

namespace {

// Largest-remainder apportionment of `total` over class counts.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& class_n,
                                   std::size_t total, std::size_t n,
                                   const std::vector<std::size_t>& cap) {
  std::vector<std::size_t> out(class_n.size(), 0);
  std::vector<double> remainder(class_n.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_n.size(); ++c) {
    double share = static_cast<double>(total) *
                   static_cast<double>(class_n[c]) / static_cast<double>(n);
    out[c] = static_cast<std::size_t>(share);
    if (out[c] > cap[c]) out[c] = cap[c];
    remainder[c] = share - static_cast<double>(out[c]);
    assigned += out[c];
  }
  while (assigned < total) {
    std::size_t best = class_n.size();
    for (std::size_t c = 0; c < class_n.size(); ++c) {
      if (out[c] >= cap[c]) continue;
      if (best == class_n.size() || remainder[c] > remainder[best]) best = c;
    }
    if (best == class_n.size()) break;  // everything capped
    ++out[best];
    remainder[best] -= 1.0;
    ++assigned;
  }
  return out;
}

}  // namespace

DatasetSplit split_accounts(const std::vector<AccountRecord>& accounts,
                            std::uint64_t seed) {
  if (accounts.size() < 3)
    throw DataError("split_accounts: need at least 3 accounts, got " +
                    std::to_string(accounts.size()));

  std::vector<std::vector<std::string>> by_label(2);
  for (const auto& rec : accounts)
    by_label[rec.label == 1 ? 1 : 0].push_back(rec.account_id);
  for (auto& ids : by_label) std::sort(ids.begin(), ids.end());

  const std::size_t n = accounts.size();
  // floor(0.15 n) exactly, but never starve validation or test; the >= 3
  // precondition guarantees one account per slice is possible.
  const std::size_t n_val = std::max<std::size_t>(1, (3 * n) / 20);
  const std::size_t n_test = n_val;

  std::vector<std::size_t> class_n = {by_label[0].size(), by_label[1].size()};
  auto val_quota = apportion(class_n, n_val, n, class_n);
  std::vector<std::size_t> left = {class_n[0] - val_quota[0],
                                   class_n[1] - val_quota[1]};
  auto test_quota = apportion(class_n, n_test, n, left);

  Rng rng(seed);
  DatasetSplit split;
  for (std::size_t c = 0; c < 2; ++c) {
    rng.shuffle(by_label[c]);
    std::size_t i = 0;
    for (std::size_t k = 0; k < val_quota[c]; ++k)
      split.validation.push_back(by_label[c][i++]);
    for (std::size_t k = 0; k < test_quota[c]; ++k)
      split.test.push_back(by_label[c][i++]);
    for (; i < by_label[c].size(); ++i) split.train.push_back(by_label[c][i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::set<std::string> load_trigger_terms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trigger terms file: " + path);
  std::set<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    std::string term = trim(line);
    if (term.empty() || term[0] == '#') {
      // A '#'-prefixed line that looks like a hashtag is a term, not a
      // comment; comments need "# " or are bare '#'.
      if (term.size() > 1 && !std::isspace(static_cast<unsigned char>(term[1])))
        terms.insert(lowercase_ascii(term));
      continue;
    }
    terms.insert(lowercase_ascii(term));
  }
  return terms;
}

void write_samples(const std::string& path,
                   const std::vector<WindowSample>& samples,
                   const std::string& meta_comment) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write samples file: " + path);
  if (!meta_comment.empty()) {
    json meta;
    meta["_meta"] = meta_comment;
    out << meta.dump() << '\n';
  }
  for (const auto& s : samples) {
    json j;
    j["account_id"] = s.account_id;
    j["window_start"] = s.window.start_days;
    j["window_end"] = s.window.end_days;
    j["label"] = s.label;
    j["tweet_count"] = s.tweet_count;
    j["document"] = s.document;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<WindowSample> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open samples file: " + path);
  std::vector<WindowSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("_meta")) continue;
    WindowSample s;
    try {
      s.account_id = j.at("account_id").get<std::string>();
      s.window.start_days = j.at("window_start").get<int>();
      s.window.end_days = j.at("window_end").get<int>();
      s.label = j.at("label").get<int>();
      s.tweet_count = j.at("tweet_count").get<std::int64_t>();
      s.document = j.at("document").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace stancecast::corpus
