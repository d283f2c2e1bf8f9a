#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stancecast/common.hpp"

// Corpus ingestion, labeling-date resolution, sliding-window slicing and
// account-level splitting.
//
// Input formats:
//   tweets file  - UTF-8 JSONL, one tweet object per line (ISO-8601
//                  created_at).
//   labels file  - CSV `account_id,label[,labeling_date]`, header required.
//   samples file - JSONL {account_id, window_start, window_end, label,
//                  tweet_count, document}; optional leading _meta line.

namespace stancecast::corpus {

struct Tweet {
  std::string tweet_id;
  std::string account_id;
  std::int64_t created_at = 0;  // unix seconds, UTC
  std::string text;
  bool is_retweet = false;
  std::optional<std::string> retweeted_account_id;
  std::int64_t favorites = 0;
  std::int64_t retweets = 0;
  std::int64_t replies = 0;
  std::int64_t quotes = 0;
  std::vector<std::string> urls;
  bool is_quote = false;
  bool is_reply = false;
};

struct AccountRecord {
  std::string account_id;
  int label = 0;  // 1 = anti-vaccine, 0 = not
  bool verified = false;
  std::vector<Tweet> tweets;  // ascending by (created_at, tweet_id)
  std::optional<std::int64_t> explicit_labeling_date;  // from labels file
  std::optional<std::int64_t> labeling_date;           // resolved
};

// Offsets count backward from the labeling date; window = [start, end) days.
struct WindowSpec {
  int start_days = 0;
  int end_days = 0;
  std::string name() const;  // "[0-90)"
};

// The seven 90-day windows, ascending by start offset.
const std::array<WindowSpec, 7>& window_specs();

struct WindowSample {
  std::string account_id;
  WindowSpec window;
  std::string document;  // tweet texts, chronological, newline-joined
  std::int64_t tweet_count = 0;
  int label = 0;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;  // each sorted by account_id

  // "train" / "validation" / "test", or empty if unknown account.
  std::string slice_of(const std::string& account_id) const;
};

struct IngestStats {
  std::int64_t tweets_read = 0;
  std::int64_t malformed_lines = 0;
  std::int64_t bad_timestamps = 0;
  std::int64_t accounts_not_in_labels = 0;   // accounts present only in tweets
  std::int64_t labeled_accounts_no_tweets = 0;
  std::vector<std::string> warnings;
};

struct IngestResult {
  std::vector<AccountRecord> accounts;  // sorted by account_id
  IngestStats stats;
};

// All tweets grouped by account, ascending by (created_at, tweet_id). No
// label filtering; ingestion and prediction both build on this.
std::map<std::string, std::vector<Tweet>> read_tweets(
    const std::string& path, IngestStats& stats);

IngestResult ingest_corpus(const std::string& tweets_path,
                           const std::string& labels_path);

// Labeling date per the class rules. An explicit date from the labels file
// wins. Label 1 without a trigger match and without an explicit date throws
// AccountRejected.
std::int64_t compute_labeling_date(const AccountRecord& record,
                                   const std::set<std::string>& trigger_terms);

// True when any whitespace token of the lowercased text equals a trigger
// term, or equals "#" + term. Avoids substring false positives.
bool contains_trigger(const std::string& text,
                      const std::set<std::string>& trigger_terms);

struct ResolveStats {
  std::vector<std::string> rejected_accounts;  // label-1 with no date source
  std::int64_t trigger_hits_in_label0 = 0;     // logged, label kept as given
};

// Applies compute_labeling_date to every record in place; rejected accounts
// are removed and reported.
ResolveStats resolve_labeling_dates(std::vector<AccountRecord>& records,
                                    const std::set<std::string>& triggers);

// One sample per non-empty window. Tweets at or after the labeling date are
// excluded from every window. Day offset = floor((labeling - created)/86400).
std::vector<WindowSample> slice_windows(const AccountRecord& record);

// Deterministic stratified 70/15/15 split by account. floor(0.15 n) accounts
// go to validation and to test, remainder to train; per-label counts are
// apportioned by largest remainder so each slice tracks the global label
// ratio. Fatal for fewer than 3 accounts.
DatasetSplit split_accounts(const std::vector<AccountRecord>& accounts,
                            std::uint64_t seed);

std::set<std::string> load_trigger_terms(const std::string& path);

// Samples file round-trips byte-identical documents.
void write_samples(const std::string& path,
                   const std::vector<WindowSample>& samples,
                   const std::string& meta_comment);
std::vector<WindowSample> read_samples(const std::string& path);

}  // namespace stancecast::corpus
