#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stancecast/textlab.hpp"
#include "support/synthetic.hpp"

using namespace stancecast;
using namespace stancecast::textlab;

namespace {

// Independent exact two-sided Mann-Whitney p: enumerate every way to deal
// the pooled midranks into group A and count tail assignments.
double exact_mwu_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled;
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t na = a.size();

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return pooled[i] < pooled[j];
  });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
    i = j;
  }

  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
  double u_obs =
      rank_sum_a - static_cast<double>(na * (na + 1)) / 2.0;

  std::vector<double> sorted_ranks(ranks);
  std::sort(sorted_ranks.begin(), sorted_ranks.end());

  std::vector<std::size_t> pick(na);
  for (std::size_t i = 0; i < na; ++i) pick[i] = i;
  std::int64_t total = 0, le = 0, ge = 0;
  while (true) {
    double rs = 0.0;
    for (std::size_t i : pick) rs += sorted_ranks[i];
    double u = rs - static_cast<double>(na * (na + 1)) / 2.0;
    ++total;
    if (u <= u_obs + 1e-9) ++le;
    if (u >= u_obs - 1e-9) ++ge;

    // next combination in lexicographic order
    std::size_t i = na;
    while (i > 0 && pick[i - 1] == n - na + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < na; ++j) pick[j] = pick[j - 1] + 1;
  }
  double tail = static_cast<double>(std::min(le, ge)) /
                static_cast<double>(total);
  return std::min(1.0, 2.0 * tail);
}

embed::WordVectorTable two_axis_table() {
  embed::WordVectorTable table;
  table.dimension = 2;
  table.entries = {{"up", {0, 1}},      {"down", {0, -1}},
                   {"east", {1, 0}},    {"west", {-1, 0}},
                   {"northeast", {1, 1}}, {"null", {0, 0}}};
  return table;
}

}  // namespace

TEST_CASE("frequency comparison rates, skew and filters") {
  // class0: 8 tokens total, class1: 8 tokens total.
  std::vector<std::string> docs0 = {"common common rare0 filler a b c d"};
  std::vector<std::string> docs1 = {"common common rare1 filler e f g h"};

  auto cmp = frequency_compare(docs0, docs1, 1, 1.0);
  CHECK(cmp.total_tokens_class0 == 8);
  CHECK(cmp.total_tokens_class1 == 8);

  auto find = [&](const std::string& token) -> const TokenFrequency& {
    for (const auto& t : cmp.by_abs_skew)
      if (t.token == token) return t;
    static TokenFrequency missing;
    FAIL("token not found: ", token);
    return missing;
  };

  SUBCASE("equal rates mean zero skew, rates are per million") {
    const auto& common = find("common");
    CHECK(common.count_class0 == 2);
    CHECK(common.count_class1 == 2);
    CHECK(common.rate_class0 == doctest::Approx(2.0 / 8.0 * 1e6));
    CHECK(common.skew == doctest::Approx(0.0));
  }

  SUBCASE("one-sided tokens get finite smoothed skew, sign by class") {
    const auto& r1 = find("rare1");
    CHECK(r1.count_class0 == 0);
    CHECK(r1.skew > 0.0);
    CHECK(r1.skew ==
          doctest::Approx(std::log((1.0 / 8.0 * 1e6 + 1.0) / 1.0)));
    const auto& r0 = find("rare0");
    CHECK(r0.skew < 0.0);
  }

  SUBCASE("skew is antisymmetric under class swap") {
    auto swapped = frequency_compare(docs1, docs0, 1, 1.0);
    for (const auto& t : cmp.by_abs_skew) {
      for (const auto& s : swapped.by_abs_skew) {
        if (s.token == t.token) CHECK(s.skew == doctest::Approx(-t.skew));
      }
    }
  }

  SUBCASE("orderings: |skew| descending and max-rate descending") {
    const auto& by_skew = cmp.by_abs_skew;
    for (std::size_t i = 1; i < by_skew.size(); ++i) {
      CHECK(std::abs(by_skew[i - 1].skew) >=
            std::abs(by_skew[i].skew) - 1e-12);
    }
    const auto& by_rate = cmp.by_max_rate;
    for (std::size_t i = 1; i < by_rate.size(); ++i) {
      double prev = std::max(by_rate[i - 1].rate_class0,
                             by_rate[i - 1].rate_class1);
      double cur = std::max(by_rate[i].rate_class0, by_rate[i].rate_class1);
      CHECK(prev >= cur - 1e-12);
    }
    CHECK(by_rate.front().token == "common");
    CHECK(by_skew.size() == by_rate.size());
  }

  SUBCASE("min_count drops tokens rare in both classes") {
    auto filtered = frequency_compare(docs0, docs1, 2, 1.0);
    bool has_common = false, has_rare = false;
    for (const auto& t : filtered.by_abs_skew) {
      if (t.token == "common") has_common = true;
      if (t.token == "rare0" || t.token == "filler") has_rare = true;
    }
    CHECK(has_common);
    CHECK_FALSE(has_rare);
  }

  SUBCASE("empty corpora are fatal") {
    CHECK_THROWS_AS(frequency_compare({}, docs1, 1, 1.0), DataError);
    CHECK_THROWS_AS(frequency_compare(docs0, {""}, 1, 1.0), DataError);
  }
}

TEST_CASE("emotion lexicon loading and per-document profiles") {
  auto dir = testsupport::fresh_dir("tmp_textlab_emotion");
  write_file(dir + "/nrc.csv",
             "token,category\nhappy,joy\nhappy,positive\nsad,sadness\n"
             "sad,negative\nrage,anger\n");
  auto lexicon = load_emotion_lexicon(dir + "/nrc.csv");
  CHECK(lexicon.size() == 3);
  CHECK(lexicon.at("happy").size() == 2);

  SUBCASE("unknown categories are fatal") {
    write_file(dir + "/bad.csv", "token,category\nmeh,ambivalence\n");
    CHECK_THROWS_AS(load_emotion_lexicon(dir + "/bad.csv"), DataError);
  }

  SUBCASE("scores count matches with multiplicity over token count") {
    auto profile = emotion_profile({"happy happy sad"}, lexicon);
    auto idx = [](const char* name) {
      for (std::size_t i = 0; i < kEmotionCategories.size(); ++i)
        if (std::string(kEmotionCategories[i]) == name) return i;
      return std::size_t{99};
    };
    CHECK(profile.mean[idx("joy")] == doctest::Approx(2.0 / 3.0));
    CHECK(profile.mean[idx("positive")] == doctest::Approx(2.0 / 3.0));
    CHECK(profile.mean[idx("sadness")] == doctest::Approx(1.0 / 3.0));
    CHECK(profile.mean[idx("anger")] == 0.0);
    REQUIRE(profile.per_document[idx("joy")].size() == 1);
    CHECK(profile.per_document[idx("joy")][0] == doctest::Approx(2.0 / 3.0));
  }

  SUBCASE("documents without lexicon words score zero everywhere") {
    auto profile = emotion_profile({"nothing to see", ""}, lexicon);
    for (double m : profile.mean) CHECK(m == 0.0);
    for (const auto& list : profile.per_document) CHECK(list.size() == 2);
  }

  SUBCASE("profile means average the per-document lists") {
    auto profile = emotion_profile({"happy", "sad", "plain"}, lexicon);
    for (std::size_t c = 0; c < 10; ++c) {
      double sum = 0.0;
      for (double v : profile.per_document[c]) sum += v;
      CHECK(profile.mean[c] == doctest::Approx(sum / 3.0));
    }
  }

  SUBCASE("an empty lexicon is fatal") {
    CHECK_THROWS_AS(emotion_profile({"doc"}, {}), DataError);
  }
}

TEST_CASE("moral axes are pole-mean differences with validation") {
  auto table = two_axis_table();

  auto axis = make_axis("care", {"up", "northeast"}, {"down"}, table);
  // mean(up, northeast) = (0.5, 1), minus down (0, -1) = (0.5, 2).
  CHECK(axis.axis == std::vector<double>{0.5, 2.0});
  CHECK(axis.foundation == "care");

  SUBCASE("out-of-vocabulary pole words are skipped, not fatal") {
    auto sparse = make_axis("care", {"up", "unseen"}, {"down"}, table);
    CHECK(sparse.axis == std::vector<double>{0.0, 2.0});
  }

  SUBCASE("overlapping poles are fatal") {
    CHECK_THROWS_AS(make_axis("care", {"up"}, {"up", "down"}, table),
                    DataError);
  }

  SUBCASE("a pole with nothing in vocabulary is fatal") {
    CHECK_THROWS_AS(make_axis("care", {"ghost"}, {"down"}, table), DataError);
    CHECK_THROWS_AS(make_axis("care", {}, {"down"}, table), DataError);
  }

  SUBCASE("coinciding pole means collapse the axis") {
    CHECK_THROWS_AS(make_axis("care", {"up"}, {"up2"}, [&] {
                      auto t = table;
                      t.entries["up2"] = {0, 1};
                      return t;
                    }()),
                    DataError);
  }

  SUBCASE("axis files parse in order with the five foundations") {
    auto dir = testsupport::fresh_dir("tmp_textlab_axes");
    write_file(dir + "/axes.csv",
               "foundation,pole,word\n"
               "care,+,up\ncare,-,down\n"
               "fairness,+,east\nfairness,-,west\n"
               "loyalty,+,northeast\nloyalty,-,down\n"
               "authority,+,up\nauthority,-,west\n"
               "sanctity,+,east\nsanctity,-,down\n");
    auto axes = load_axes(dir + "/axes.csv", table);
    REQUIRE(axes.size() == 5);
    CHECK(axes[0].foundation == "care");
    CHECK(axes[1].foundation == "fairness");
    CHECK(axes[4].foundation == "sanctity");

    write_file(dir + "/bad.csv", "foundation,pole,word\nbravery,+,up\n");
    CHECK_THROWS_AS(load_axes(dir + "/bad.csv", table), DataError);
    write_file(dir + "/badpole.csv", "foundation,pole,word\ncare,plus,up\n");
    CHECK_THROWS_AS(load_axes(dir + "/badpole.csv", table), DataError);
  }
}

TEST_CASE("frameaxis bias and intensity") {
  auto table = two_axis_table();
  auto axis = make_axis("care", {"up"}, {"down"}, table);  // axis (0, 2)

  SUBCASE("a word parallel to the axis has bias 1") {
    auto score = frameaxis_score("up", axis, table, 0.0);
    CHECK_FALSE(score.no_vocab);
    CHECK(score.bias == doctest::Approx(1.0));
    CHECK(score.intensity == doctest::Approx(1.0));  // (1 - 0)^2
  }

  SUBCASE("opposed words cancel bias but leave intensity") {
    auto score = frameaxis_score("up down", axis, table, 0.0);
    CHECK(score.bias == doctest::Approx(0.0));
    CHECK(score.intensity == doctest::Approx(1.0));  // mean of (+-1)^2

    double background = 0.25;
    auto shifted = frameaxis_score("up down", axis, table, background);
    CHECK(shifted.bias == doctest::Approx(0.0));
    CHECK(shifted.intensity ==
          doctest::Approx(0.5 * ((1 - 0.25) * (1 - 0.25) +
                                 (-1 - 0.25) * (-1 - 0.25))));
  }

  SUBCASE("orthogonal words contribute zero cosine") {
    CHECK(frameaxis_score("east", axis, table, 0.0).bias ==
          doctest::Approx(0.0));
    // northeast has cosine 1/sqrt(2) to the axis; east pulls the mean down.
    auto mixed = frameaxis_score("northeast east", axis, table, 0.0);
    CHECK(mixed.bias == doctest::Approx(0.5 / std::sqrt(2.0)));
  }

  SUBCASE("token counts weight the mean") {
    auto weighted = frameaxis_score("up up down", axis, table, 0.0);
    CHECK(weighted.bias == doctest::Approx((2.0 - 1.0) / 3.0));
  }

  SUBCASE("duplicating the document changes nothing") {
    auto once = frameaxis_score("up east northeast", axis, table, 0.1);
    auto twice = frameaxis_score(
        "up east northeast up east northeast", axis, table, 0.1);
    CHECK(once.bias == doctest::Approx(twice.bias));
    CHECK(once.intensity == doctest::Approx(twice.intensity));
  }

  SUBCASE("zero-norm vectors and unknown words count as out of vocabulary") {
    auto score = frameaxis_score("null mystery", axis, table, 0.0);
    CHECK(score.no_vocab);
    CHECK(score.bias == 0.0);
    CHECK(score.intensity == 0.0);

    auto mixed = frameaxis_score("null up", axis, table, 0.0);
    CHECK_FALSE(mixed.no_vocab);
    CHECK(mixed.bias == doctest::Approx(1.0));  // only "up" scores
  }

  SUBCASE("bias stays in [-1,1] and intensity non-negative under fuzz") {
    Rng rng(66);
    embed::WordVectorTable fuzz_table;
    fuzz_table.dimension = 6;
    std::vector<std::string> vocab;
    for (int w = 0; w < 40; ++w) {
      std::string token = "w" + std::to_string(w);
      std::vector<double> vec(6);
      for (auto& v : vec) v = rng.gaussian();
      fuzz_table.entries[token] = vec;
      vocab.push_back(token);
    }
    auto fuzz_axis = make_axis("care", {"w0", "w1"}, {"w2", "w3"}, fuzz_table);
    for (int i = 0; i < 200; ++i) {
      std::string doc;
      std::size_t len = 1 + rng.uniform_int(12);
      for (std::size_t t = 0; t < len; ++t)
        doc += vocab[rng.uniform_int(vocab.size())] + " ";
      auto score = frameaxis_score(doc, fuzz_axis, fuzz_table,
                                   rng.uniform() - 0.5);
      CHECK(score.bias >= -1.0);
      CHECK(score.bias <= 1.0);
      CHECK(score.intensity >= 0.0);
    }
  }

  SUBCASE("flipping the poles negates bias and preserves intensity") {
    auto flipped = make_axis("care", {"down"}, {"up"}, table);
    std::vector<std::string> corpus = {"up up east", "down northeast"};
    double bg = background_bias(corpus, axis, table);
    double bg_flipped = background_bias(corpus, flipped, table);
    CHECK(bg_flipped == doctest::Approx(-bg));
    for (const auto& doc : corpus) {
      auto orig = frameaxis_score(doc, axis, table, bg);
      auto mirror = frameaxis_score(doc, flipped, table, bg_flipped);
      CHECK(mirror.bias == doctest::Approx(-orig.bias));
      CHECK(mirror.intensity == doctest::Approx(orig.intensity));
    }
  }
}

TEST_CASE("background bias pools token counts across the corpus") {
  auto table = two_axis_table();
  auto axis = make_axis("care", {"up"}, {"down"}, table);

  SUBCASE("a one-document corpus equals that document's bias") {
    std::string doc = "up northeast east";
    CHECK(background_bias({doc}, axis, table) ==
          doctest::Approx(frameaxis_score(doc, axis, table, 0.0).bias));
  }

  SUBCASE("a mirror-symmetric corpus has zero background") {
    CHECK(background_bias({"up down", "down up"}, axis, table) ==
          doctest::Approx(0.0));
  }

  SUBCASE("duplicating the corpus leaves the background unchanged") {
    std::vector<std::string> corpus = {"up east", "northeast down down"};
    double once = background_bias(corpus, axis, table);
    std::vector<std::string> doubled = corpus;
    doubled.insert(doubled.end(), corpus.begin(), corpus.end());
    CHECK(background_bias(doubled, axis, table) == doctest::Approx(once));
  }

  SUBCASE("token weighting differs from per-document averaging") {
    // doc1 has 1 scoring token at cos 1; doc2 has 3 at cos -1.
    double bg = background_bias({"up", "down down down"}, axis, table);
    CHECK(bg == doctest::Approx((1.0 - 3.0) / 4.0));
  }

  SUBCASE("a corpus with nothing in vocabulary is fatal") {
    CHECK_THROWS_AS(background_bias({"mystery words"}, axis, table),
                    DataError);
    CHECK_THROWS_AS(background_bias({}, axis, table), DataError);
  }
}

TEST_CASE("mann-whitney u exact path") {
  SUBCASE("fully separated 3-vs-3 gives U 0 and p 0.10") {
    auto result = mann_whitney_u({1, 2, 3}, {4, 5, 6});
    CHECK(result.u_a == 0.0);
    CHECK(result.exact);
    CHECK(result.p_value == doctest::Approx(0.10));
  }

  SUBCASE("identical samples sit dead centre") {
    auto result = mann_whitney_u({1, 2, 3}, {1, 2, 3});
    CHECK(result.u_a == doctest::Approx(4.5));  // n^2 / 2
    CHECK(result.p_value > 0.9);
  }

  SUBCASE("all-tie case collapses to p 1") {
    auto result = mann_whitney_u({1, 1}, {1, 1});
    CHECK(result.u_a == doctest::Approx(2.0));
    CHECK(result.p_value == doctest::Approx(1.0));
  }

  SUBCASE("matches the independent enumerator on random small samples") {
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
      std::vector<double> a(2 + rng.uniform_int(6));
      std::vector<double> b(2 + rng.uniform_int(6));
      for (auto& v : a)
        v = static_cast<double>(rng.uniform_int(6));  // ties likely
      for (auto& v : b) v = static_cast<double>(rng.uniform_int(6));
      auto result = mann_whitney_u(a, b);
      REQUIRE(result.exact);
      CHECK(result.p_value == doctest::Approx(exact_mwu_p(a, b)).epsilon(1e-9));
    }
  }

  SUBCASE("U_A + U_B covers all pairs") {
    Rng rng(32);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> a(3 + rng.uniform_int(10));
      std::vector<double> b(3 + rng.uniform_int(10));
      for (auto& v : a) v = rng.uniform();
      for (auto& v : b) v = rng.uniform();
      auto ab = mann_whitney_u(a, b);
      auto ba = mann_whitney_u(b, a);
      CHECK(ab.u_a + ba.u_a ==
            doctest::Approx(static_cast<double>(a.size() * b.size())));
    }
  }
}

TEST_CASE("mann-whitney u normal approximation") {
  SUBCASE("approximation is used above the 16-sample crossover") {
    std::vector<double> a(9), b(9);
    for (int i = 0; i < 9; ++i) {
      a[i] = i;
      b[i] = i + 0.5;
    }
    CHECK(mann_whitney_u(a, b).exact == false);
    std::vector<double> small_a(a.begin(), a.begin() + 8);
    std::vector<double> small_b(b.begin(), b.begin() + 8);
    CHECK(mann_whitney_u(small_a, small_b).exact == true);
  }

  SUBCASE("approximate p stays within 10% of exact enumeration at 9v9") {
    Rng rng(47);
    for (int i = 0; i < 50; ++i) {
      std::vector<double> a(9), b(9);
      for (auto& v : a) v = rng.uniform();
      for (auto& v : b) v = rng.uniform();
      auto approx = mann_whitney_u(a, b);
      REQUIRE_FALSE(approx.exact);
      double exact = exact_mwu_p(a, b);
      CHECK(approx.p_value ==
            doctest::Approx(exact).epsilon(0.10));
    }
  }

  SUBCASE("a planted +0.1 shift at n=500 is decisively significant") {
    Rng rng(48);
    std::vector<double> base(500), shifted(500);
    for (int i = 0; i < 500; ++i) {
      base[i] = rng.uniform();
      shifted[i] = rng.uniform() + 0.1;
    }
    auto result = mann_whitney_u(base, shifted);
    CHECK_FALSE(result.exact);
    CHECK(result.p_value < 0.01);
  }

  SUBCASE("degenerate variance from total ties gives p 1") {
    std::vector<double> a(12, 3.0), b(12, 3.0);
    auto result = mann_whitney_u(a, b);
    CHECK_FALSE(result.exact);
    CHECK(result.p_value == 1.0);
    CHECK(result.u_a == doctest::Approx(72.0));
  }

  SUBCASE("empty samples are fatal") {
    CHECK_THROWS_AS(mann_whitney_u({}, {1.0}), DataError);
    CHECK_THROWS_AS(mann_whitney_u({1.0}, {}), DataError);
  }
}

TEST_CASE("class comparison report medians, direction and csv") {
  std::vector<std::string> names = {"joy", "anger"};

  SUBCASE("identical classes show no direction and p near 1") {
    std::vector<std::vector<double>> scores = {{0.1, 0.2, 0.3, 0.4},
                                               {0.0, 0.0, 0.5, 0.5}};
    auto rows = class_comparison_report(names, scores, scores);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
      CHECK(row.direction == "none");
      CHECK(row.p_value > 0.9);
      CHECK(row.median_class0 == row.median_class1);
    }
    CHECK(rows[0].median_class0 == doctest::Approx(0.25));  // even-count mean
  }

  SUBCASE("a planted shift is flagged with a small p-value") {
    Rng rng(81);
    std::vector<double> joy0(500), joy1(500), anger0(500), anger1(500);
    for (int i = 0; i < 500; ++i) {
      joy0[i] = rng.uniform();
      joy1[i] = rng.uniform() + 0.1;  // class1 higher
      double shared = rng.uniform();
      anger0[i] = shared;
      anger1[i] = shared;
    }
    auto rows = class_comparison_report(names, {joy0, anger0}, {joy1, anger1});
    CHECK(rows[0].direction == "class1");
    CHECK(rows[0].p_value < 0.01);
    CHECK(rows[1].direction == "none");
    CHECK(rows[1].p_value > 0.9);
  }

  SUBCASE("csv rendering carries one row per name") {
    std::vector<std::vector<double>> c0 = {{1, 2, 3}, {5, 5, 5}};
    std::vector<std::vector<double>> c1 = {{4, 5, 6}, {1, 1, 2}};
    auto rows = class_comparison_report(names, c0, c1);
    CHECK(rows[0].direction == "class1");
    CHECK(rows[1].direction == "class0");
    auto csv = comparison_to_csv(rows);
    CHECK(csv.rfind(
              "name,median_class0,median_class1,u_statistic,p_value,direction"
              "\n",
              0) == 0);
    CHECK(csv.find("joy,") != std::string::npos);
    CHECK(csv.find("anger,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
