#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stancecast/corpus.hpp"
#include "support/synthetic.hpp"

using namespace stancecast;
using namespace stancecast::corpus;

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kT0 = 1609459200;  // 2021-01-01T00:00:00Z

std::string tweet_line(const std::string& id, const std::string& account,
                       std::int64_t created_at, const std::string& text) {
  return "{\"tweet_id\":\"" + id + "\",\"account_id\":\"" + account +
         "\",\"created_at\":\"" + format_iso8601(created_at) +
         "\",\"text\":\"" + text + "\"}\n";
}

AccountRecord record_with_offsets(const std::string& id, int label,
                                  std::int64_t anchor,
                                  const std::vector<std::int64_t>& offsets_days,
                                  const std::string& text = "hello") {
  AccountRecord rec;
  rec.account_id = id;
  rec.label = label;
  int seq = 0;
  for (auto off : offsets_days) {
    Tweet t;
    t.tweet_id = "t" + std::to_string(seq++);
    t.account_id = id;
    t.created_at = anchor - off * kDay;
    t.text = text + " " + std::to_string(off);
    rec.tweets.push_back(t);
  }
  std::sort(rec.tweets.begin(), rec.tweets.end(),
            [](const Tweet& a, const Tweet& b) {
              return a.created_at < b.created_at;
            });
  rec.labeling_date = anchor;
  return rec;
}

}  // namespace

TEST_CASE("ingestion groups tweets per account in time order") {
  auto dir = testsupport::fresh_dir("tmp_corpus_ingest");
  // Interleaved and out of order on purpose.
  std::string tweets;
  tweets += tweet_line("b2", "bob", kT0 + 500, "second bob");
  tweets += tweet_line("a3", "alice", kT0 + 900, "third alice");
  tweets += tweet_line("a1", "alice", kT0 + 100, "first alice");
  tweets += tweet_line("b1", "bob", kT0 + 200, "first bob");
  tweets += tweet_line("a2", "alice", kT0 + 400, "second alice");
  write_file(dir + "/tweets.jsonl", tweets);
  write_file(dir + "/labels.csv", "account_id,label\nalice,1\nbob,0\n");

  auto result = ingest_corpus(dir + "/tweets.jsonl", dir + "/labels.csv");
  CHECK(result.stats.tweets_read == 5);
  CHECK(result.stats.malformed_lines == 0);
  CHECK(result.stats.bad_timestamps == 0);
  REQUIRE(result.accounts.size() == 2);
  CHECK(result.accounts[0].account_id == "alice");
  CHECK(result.accounts[0].label == 1);
  REQUIRE(result.accounts[0].tweets.size() == 3);
  CHECK(result.accounts[0].tweets[0].tweet_id == "a1");
  CHECK(result.accounts[0].tweets[2].tweet_id == "a3");
  CHECK(result.accounts[1].account_id == "bob");
  CHECK(result.accounts[1].tweets.front().text == "first bob");

  SUBCASE("equal timestamps fall back to tweet_id order") {
    IngestStats stats;
    std::string dup = tweet_line("z9", "carol", kT0, "later id");
    dup += tweet_line("a0", "carol", kT0, "earlier id");
    write_file(dir + "/dup.jsonl", dup);
    auto by_account = read_tweets(dir + "/dup.jsonl", stats);
    REQUIRE(by_account.at("carol").size() == 2);
    CHECK(by_account.at("carol")[0].tweet_id == "a0");
    CHECK(by_account.at("carol")[1].tweet_id == "z9");
  }
}

TEST_CASE("broken lines are skipped and tallied, not fatal") {
  auto dir = testsupport::fresh_dir("tmp_corpus_broken");
  std::string tweets;
  tweets += tweet_line("t1", "alice", kT0, "fine");
  tweets += "not json at all\n";
  tweets += "{\"tweet_id\":\"t2\",\"account_id\":\"alice\",\"text\":\"no timestamp field\"}\n";
  tweets += "{\"tweet_id\":\"t3\",\"account_id\":\"alice\",\"created_at\":\"yesterday-ish\",\"text\":\"x\"}\n";
  tweets += "{\"tweet_id\":\"t4\",\"account_id\":\"alice\",\"created_at\":\"2021-01-01T00:00:00Z\",\"text\":\"x\",\"favorites\":-3}\n";
  tweets += "{\"tweet_id\":\"t5\",\"account_id\":\"alice\",\"created_at\":\"2021-01-01T00:00:00Z\",\"text\":\"x\",\"is_retweet\":true}\n";
  tweets += tweet_line("t6", "alice", kT0 + 60, "also fine");
  write_file(dir + "/tweets.jsonl", tweets);
  write_file(dir + "/labels.csv", "account_id,label\nalice,0\n");

  auto result = ingest_corpus(dir + "/tweets.jsonl", dir + "/labels.csv");
  CHECK(result.stats.tweets_read == 2);
  // garbage, missing field, negative count, retweet without source account
  CHECK(result.stats.malformed_lines == 4);
  CHECK(result.stats.bad_timestamps == 1);
  CHECK(result.stats.warnings.size() >= 5);
  REQUIRE(result.accounts.size() == 1);
  CHECK(result.accounts[0].tweets.size() == 2);

  SUBCASE("a file that is mostly bad timestamps still yields the good rows") {
    std::string mostly_bad;
    for (int i = 0; i < 9; ++i)
      mostly_bad += "{\"tweet_id\":\"b" + std::to_string(i) +
                    "\",\"account_id\":\"alice\",\"created_at\":\"not a "
                    "date\",\"text\":\"x\"}\n";
    mostly_bad += tweet_line("good", "alice", kT0, "survivor");
    write_file(dir + "/bad.jsonl", mostly_bad);
    IngestStats stats;
    auto by_account = read_tweets(dir + "/bad.jsonl", stats);
    CHECK(stats.bad_timestamps == 9);
    CHECK(stats.tweets_read == 1);
    REQUIRE(by_account.at("alice").size() == 1);
    CHECK(by_account.at("alice")[0].tweet_id == "good");
  }
}

TEST_CASE("label coverage mismatches are reported") {
  auto dir = testsupport::fresh_dir("tmp_corpus_coverage");
  std::string tweets = tweet_line("t1", "alice", kT0, "x") +
                       tweet_line("t2", "mallory", kT0, "x");
  write_file(dir + "/tweets.jsonl", tweets);
  write_file(dir + "/labels.csv", "account_id,label\nalice,0\nghost,1\n");

  auto result = ingest_corpus(dir + "/tweets.jsonl", dir + "/labels.csv");
  CHECK(result.stats.accounts_not_in_labels == 1);       // mallory
  CHECK(result.stats.labeled_accounts_no_tweets == 1);   // ghost
  REQUIRE(result.accounts.size() == 1);
  CHECK(result.accounts[0].account_id == "alice");

  SUBCASE("labels file without a header is rejected") {
    write_file(dir + "/nohdr.csv", "alice,0\n");
    CHECK_THROWS_AS(ingest_corpus(dir + "/tweets.jsonl", dir + "/nohdr.csv"),
                    DataError);
  }
  SUBCASE("bad label values are counted as malformed") {
    write_file(dir + "/badlabel.csv",
               "account_id,label\nalice,0\nmallory,2\n");
    auto r = ingest_corpus(dir + "/tweets.jsonl", dir + "/badlabel.csv");
    CHECK(r.stats.malformed_lines == 1);
    CHECK(r.accounts.size() == 1);
  }
}

TEST_CASE("labeling date resolution follows the class rules") {
  std::set<std::string> triggers = {"vaccinescause", "#hoax"};

  SUBCASE("anti class anchors on the first trigger tweet") {
    AccountRecord rec = record_with_offsets("a", 1, kT0 + 100 * kDay,
                                            {90, 50, 20, 5}, "filler");
    rec.labeling_date.reset();
    // Triggers at offsets 50 and 20; the earlier one must win.
    rec.tweets[1].text = "they say VaccinesCause everything";
    rec.tweets[2].text = "more #hoax talk";
    CHECK(compute_labeling_date(rec, triggers) == rec.tweets[1].created_at);
  }

  SUBCASE("control class anchors on the most recent tweet") {
    AccountRecord rec =
        record_with_offsets("c", 0, kT0 + 99 * kDay, {99, 42, 0}, "benign");
    rec.labeling_date.reset();
    CHECK(compute_labeling_date(rec, {}) == rec.tweets.back().created_at);
  }

  SUBCASE("an explicit date overrides both rules") {
    AccountRecord rec =
        record_with_offsets("e", 1, kT0 + 10 * kDay, {5, 2}, "no trigger");
    rec.labeling_date.reset();
    rec.explicit_labeling_date = kT0;
    CHECK(compute_labeling_date(rec, triggers) == kT0);
  }

  SUBCASE("anti class without any date source is rejected") {
    AccountRecord rec =
        record_with_offsets("r", 1, kT0 + 10 * kDay, {5, 2}, "calm");
    rec.labeling_date.reset();
    CHECK_THROWS_AS(compute_labeling_date(rec, triggers), AccountRejected);
  }

  SUBCASE("resolve drops rejected accounts and logs control trigger hits") {
    std::vector<AccountRecord> records;
    auto ok1 = record_with_offsets("ok1", 1, kT0 + 9 * kDay, {3}, "#hoax");
    ok1.labeling_date.reset();
    auto bad = record_with_offsets("bad", 1, kT0 + 9 * kDay, {3}, "calm");
    bad.labeling_date.reset();
    auto ctl = record_with_offsets("ctl", 0, kT0 + 9 * kDay, {3}, "#hoax");
    ctl.labeling_date.reset();
    records = {ok1, bad, ctl};
    auto stats = resolve_labeling_dates(records, triggers);
    REQUIRE(stats.rejected_accounts.size() == 1);
    CHECK(stats.rejected_accounts[0] == "bad");
    CHECK(stats.trigger_hits_in_label0 == 1);
    REQUIRE(records.size() == 2);
    CHECK(records[0].account_id == "ok1");
    CHECK(records[0].labeling_date.has_value());
    CHECK(records[1].label == 0);  // control kept despite the hit
  }
}

TEST_CASE("trigger matching is whole-token, case-blind, hashtag-aware") {
  std::set<std::string> triggers = {"plandemic", "#sheeple"};
  CHECK(contains_trigger("wake up PLANDEMIC is here", triggers));
  CHECK(contains_trigger("wake up #plandemic!", triggers));   // hashtag form
  CHECK(contains_trigger("plandemic,", triggers));            // punctuation
  CHECK(contains_trigger("you #Sheeple never learn", triggers));
  CHECK_FALSE(contains_trigger("sheeple without the hash", triggers));
  CHECK_FALSE(contains_trigger("noplandemic here", triggers));  // substring
  CHECK_FALSE(contains_trigger("plandemics", triggers));
  CHECK_FALSE(contains_trigger("anything", {}));
}

TEST_CASE("trigger file treats hashtag lines as terms, '# ' as comment") {
  auto dir = testsupport::fresh_dir("tmp_corpus_triggers");
  write_file(dir + "/triggers.txt",
             "# these are the terms\nPlandemic\n#sheeple\n\n#  indented "
             "comment? no: bare '#' next\n#\n");
  auto terms = load_trigger_terms(dir + "/triggers.txt");
  CHECK(terms.count("plandemic") == 1);
  CHECK(terms.count("#sheeple") == 1);
  CHECK(terms.size() == 2);
}

TEST_CASE("window slicing honours offsets, overlap and the leak rule") {
  const std::int64_t anchor = kT0 + 500 * kDay;

  SUBCASE("an offset of exactly 100 days lands only in [60-150)") {
    auto rec = record_with_offsets("a", 0, anchor, {100});
    auto samples = slice_windows(rec);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].window.name() == "[60-150)");
  }

  SUBCASE("an offset of 70 days lands in both overlapping windows") {
    auto rec = record_with_offsets("a", 0, anchor, {70});
    auto samples = slice_windows(rec);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].window.name() == "[0-90)");
    CHECK(samples[1].window.name() == "[60-150)");
    CHECK(samples[0].document == samples[1].document);
  }

  SUBCASE("boundary offsets: 89 in, 90 out of the first window") {
    auto rec = record_with_offsets("a", 0, anchor, {89, 90});
    auto samples = slice_windows(rec);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].window.name() == "[0-90)");
    CHECK(samples[0].tweet_count == 1);
    CHECK(samples[1].window.name() == "[60-150)");
    CHECK(samples[1].tweet_count == 2);
  }

  SUBCASE("offset 449 is the last covered day, 450 falls outside") {
    auto rec = record_with_offsets("a", 0, anchor, {449, 450});
    auto samples = slice_windows(rec);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].window.name() == "[360-450)");
    CHECK(samples[0].tweet_count == 1);
  }

  SUBCASE("a partial day still counts as its floor offset") {
    AccountRecord rec;
    rec.account_id = "a";
    rec.labeling_date = anchor;
    Tweet t;
    t.tweet_id = "t";
    t.account_id = "a";
    t.created_at = anchor - 1;  // one second before the anchor, offset 0
    t.text = "just under the wire";
    rec.tweets = {t};
    auto samples = slice_windows(rec);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].window.name() == "[0-90)");
  }

  SUBCASE("tweets at or after the labeling date never appear") {
    AccountRecord rec = record_with_offsets("a", 1, anchor, {10});
    Tweet at_anchor;
    at_anchor.tweet_id = "x1";
    at_anchor.account_id = "a";
    at_anchor.created_at = anchor;
    at_anchor.text = "leaky-anchor";
    Tweet after = at_anchor;
    after.tweet_id = "x2";
    after.created_at = anchor + 3 * kDay;
    after.text = "leaky-later";
    rec.tweets.push_back(at_anchor);
    rec.tweets.push_back(after);
    auto samples = slice_windows(rec);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].document.find("leaky") == std::string::npos);

    AccountRecord only_after = record_with_offsets("b", 1, anchor, {});
    only_after.tweets = {at_anchor, after};
    CHECK(slice_windows(only_after).empty());
  }

  SUBCASE("documents are chronological and newline-joined") {
    auto rec = record_with_offsets("a", 1, anchor, {88, 30, 2}, "msg");
    auto samples = slice_windows(rec);
    REQUIRE_FALSE(samples.empty());
    CHECK(samples[0].document == "msg 88\nmsg 30\nmsg 2");
    CHECK(samples[0].tweet_count == 3);
    CHECK(samples[0].label == 1);
  }

  SUBCASE("an unresolved labeling date is a programming error") {
    auto rec = record_with_offsets("a", 0, anchor, {10});
    rec.labeling_date.reset();
    CHECK_THROWS_AS(slice_windows(rec), DataError);
  }
}

TEST_CASE("split is stratified, exact-sized and deterministic") {
  auto make_accounts = [](std::size_t n0, std::size_t n1) {
    std::vector<AccountRecord> accounts;
    for (std::size_t i = 0; i < n0 + n1; ++i) {
      AccountRecord rec;
      rec.account_id = "acct" + std::to_string(1000 + i);
      rec.label = i < n0 ? 0 : 1;
      accounts.push_back(rec);
    }
    return accounts;
  };

  SUBCASE("100 accounts split 70/15/15") {
    auto accounts = make_accounts(40, 60);
    auto split = split_accounts(accounts, 7);
    CHECK(split.train.size() == 70);
    CHECK(split.validation.size() == 15);
    CHECK(split.test.size() == 15);

    auto count_label1 = [&](const std::vector<std::string>& ids) {
      std::size_t k = 0;
      for (const auto& id : ids) {
        auto it = std::find_if(accounts.begin(), accounts.end(),
                               [&](const AccountRecord& r) {
                                 return r.account_id == id;
                               });
        REQUIRE(it != accounts.end());
        if (it->label == 1) ++k;
      }
      return k;
    };
    // 40/60 mix: 0.15 * 40 = 6 and 0.15 * 60 = 9, both exact.
    CHECK(count_label1(split.validation) == 9);
    CHECK(count_label1(split.test) == 9);
    CHECK(count_label1(split.train) == 42);
  }

  SUBCASE("20 accounts split 14/3/3") {
    auto accounts = make_accounts(10, 10);
    auto split = split_accounts(accounts, 3);
    CHECK(split.train.size() == 14);
    CHECK(split.validation.size() == 3);
    CHECK(split.test.size() == 3);
  }

  SUBCASE("every account lands in exactly one slice") {
    auto accounts = make_accounts(13, 24);
    auto split = split_accounts(accounts, 99);
    std::set<std::string> seen;
    for (const auto* slice : {&split.train, &split.validation, &split.test})
      for (const auto& id : *slice) CHECK(seen.insert(id).second);
    CHECK(seen.size() == accounts.size());
    CHECK(split.slice_of(split.train.front()) == "train");
    CHECK(split.slice_of(split.validation.front()) == "validation");
    CHECK(split.slice_of(split.test.front()) == "test");
    CHECK(split.slice_of("nobody") == "");
  }

  SUBCASE("tiny corpora keep one account each for validation and test") {
    // floor(0.15 * 6) is 0; the split still reserves one seat per slice.
    auto six = split_accounts(make_accounts(3, 3), 2);
    CHECK(six.train.size() == 4);
    CHECK(six.validation.size() == 1);
    CHECK(six.test.size() == 1);

    auto three = split_accounts(make_accounts(2, 1), 2);
    CHECK(three.train.size() == 1);
    CHECK(three.validation.size() == 1);
    CHECK(three.test.size() == 1);
  }

  SUBCASE("remainder ties favour the lower class label") {
    // 5/5 accounts, one validation seat: shares are 0.5 each, class 0 wins.
    auto accounts = make_accounts(5, 5);
    auto split = split_accounts(accounts, 11);
    REQUIRE(split.validation.size() == 1);
    REQUIRE(split.test.size() == 1);
    auto label_of = [&](const std::string& id) {
      for (const auto& r : accounts)
        if (r.account_id == id) return r.label;
      return -1;
    };
    CHECK(label_of(split.validation[0]) == 0);
    CHECK(label_of(split.test[0]) == 0);
  }

  SUBCASE("the same seed reproduces the split, a new seed moves it") {
    auto accounts = make_accounts(30, 30);
    auto a = split_accounts(accounts, 5);
    auto b = split_accounts(accounts, 5);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
    auto c = split_accounts(accounts, 6);
    CHECK((a.validation != c.validation || a.test != c.test));
  }

  SUBCASE("fewer than 3 accounts cannot be split") {
    auto accounts = make_accounts(1, 1);
    CHECK_THROWS_AS(split_accounts(accounts, 1), DataError);
  }
}

TEST_CASE("samples survive a write/read round trip byte-for-byte") {
  auto dir = testsupport::fresh_dir("tmp_corpus_roundtrip");
  std::vector<WindowSample> samples;
  WindowSample s1;
  s1.account_id = "acct1";
  s1.window = {0, 90};
  s1.document = "line one\nline \"two\" with quotes\n\ttabs and \\slashes";
  s1.tweet_count = 3;
  s1.label = 1;
  WindowSample s2;
  s2.account_id = "acct2";
  s2.window = {360, 450};
  s2.document = "naive cafe \xc3\xa9\xc3\xa8 utf-8 bytes";
  s2.tweet_count = 1;
  s2.label = 0;
  samples = {s1, s2};

  write_samples(dir + "/samples.jsonl", samples, "test run");
  auto back = read_samples(dir + "/samples.jsonl");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].account_id == samples[i].account_id);
    CHECK(back[i].window.start_days == samples[i].window.start_days);
    CHECK(back[i].window.end_days == samples[i].window.end_days);
    CHECK(back[i].document == samples[i].document);
    CHECK(back[i].tweet_count == samples[i].tweet_count);
    CHECK(back[i].label == samples[i].label);
  }

  SUBCASE("the meta line is written first and skipped on read") {
    auto raw = read_file(dir + "/samples.jsonl");
    CHECK(raw.rfind("{\"_meta\"", 0) == 0);
  }
}

TEST_CASE("synthetic corpus end-to-end: ingest, resolve, slice") {
  testsupport::SyntheticSpec spec;
  spec.n_accounts = 12;
  spec.seed = 21;
  spec.explicit_dates = false;  // anchor via trigger / last tweet
  auto corpus = testsupport::make_corpus(spec);
  auto paths = testsupport::write_corpus(
      testsupport::fresh_dir("tmp_corpus_synth"), corpus);

  auto result = ingest_corpus(paths.tweets, paths.labels);
  CHECK(result.accounts.size() == 12);
  auto triggers = load_trigger_terms(paths.triggers);
  auto rstats = resolve_labeling_dates(result.accounts, triggers);
  CHECK(rstats.rejected_accounts.empty());

  for (const auto& rec : result.accounts) {
    REQUIRE(rec.labeling_date.has_value());
    CHECK(*rec.labeling_date == corpus.anchors.at(rec.account_id));
    auto samples = slice_windows(rec);
    CHECK(samples.size() == 7);  // generator fills every window
    for (const auto& s : samples) CHECK(s.label == rec.label);
  }
}
