#include "stancecast/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stancecast/textlab.hpp"

namespace stancecast::pipeline {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& known) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw UsageError("config: unknown key '" + where + key + "'");
}

std::string get_path(const json& j, const char* key) {
  if (!j.contains(key)) return "";
  return j.at(key).get<std::string>();
}

void require_file(const std::string& path, const char* what) {
  if (path.empty())
    throw UsageError(std::string("config: missing required path '") + what +
                     "'");
  if (!file_exists(path))
    throw DataError(std::string(what) + " file not found: " + path);
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void ensure_output_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec)
    throw DataError("cannot create output directory '" + config.output_dir +
                    "': " + ec.message());
}

std::string out_path(const RunConfig& config, const char* name) {
  return (std::filesystem::path(config.output_dir) / name).string();
}

void log_warnings(const corpus::IngestStats& stats) {
  for (const auto& w : stats.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

RunConfig load_config(const std::string& path) {
  const std::string raw = read_file(path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + path + ": not an object");
  require_keys(j, "", {"paths", "embedder", "split_seed", "train",
                       "threshold_grid_step", "report_format", "analysis"});

  RunConfig config;
  config.config_hash = fnv1a64(raw);

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    require_keys(p, "paths.",
                 {"tweets", "labels", "triggers", "vectors", "emotion_lexicon",
                  "axes", "valence_lexicon", "domain_ratings",
                  "antivax_accounts", "output_dir"});
    config.tweets = get_path(p, "tweets");
    config.labels = get_path(p, "labels");
    config.triggers = get_path(p, "triggers");
    config.vectors = get_path(p, "vectors");
    config.emotion_lexicon = get_path(p, "emotion_lexicon");
    config.axes = get_path(p, "axes");
    config.valence_lexicon = get_path(p, "valence_lexicon");
    config.domain_ratings = get_path(p, "domain_ratings");
    config.antivax_accounts = get_path(p, "antivax_accounts");
    if (p.contains("output_dir"))
      config.output_dir = p.at("output_dir").get<std::string>();
  }
  if (j.contains("embedder"))
    config.embedder_id = j.at("embedder").get<std::string>();
  if (j.contains("split_seed"))
    config.split_seed = j.at("split_seed").get<std::uint64_t>();
  if (j.contains("train")) {
    const auto& t = j.at("train");
    require_keys(t, "train.",
                 {"batch_size", "dropout", "learning_rate", "beta1", "beta2",
                  "epsilon", "weight_decay", "max_epochs",
                  "early_stop_patience", "seed"});
    auto& tc = config.train;
    if (t.contains("batch_size"))
      tc.batch_size = t.at("batch_size").get<std::size_t>();
    if (t.contains("dropout")) tc.dropout = t.at("dropout").get<double>();
    if (t.contains("learning_rate"))
      tc.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("beta1")) tc.beta1 = t.at("beta1").get<double>();
    if (t.contains("beta2")) tc.beta2 = t.at("beta2").get<double>();
    if (t.contains("epsilon")) tc.epsilon = t.at("epsilon").get<double>();
    if (t.contains("weight_decay"))
      tc.weight_decay = t.at("weight_decay").get<double>();
    if (t.contains("max_epochs"))
      tc.max_epochs = t.at("max_epochs").get<std::size_t>();
    if (t.contains("early_stop_patience"))
      tc.early_stop_patience = t.at("early_stop_patience").get<std::size_t>();
    if (t.contains("seed")) tc.seed = t.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threshold_grid_step"))
    config.threshold_grid_step = j.at("threshold_grid_step").get<double>();
  if (j.contains("report_format")) {
    config.report_format = j.at("report_format").get<std::string>();
    if (config.report_format != "text" && config.report_format != "csv" &&
        config.report_format != "both")
      throw UsageError("config: report_format must be text, csv or both");
  }
  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    require_keys(a, "analysis.", {"min_count", "smoothing"});
    if (a.contains("min_count"))
      config.analysis.min_count = a.at("min_count").get<std::int64_t>();
    if (a.contains("smoothing"))
      config.analysis.smoothing = a.at("smoothing").get<double>();
  }
  return config;
}

std::string artifact_header(const RunConfig& config) {
  return std::string("# ") + kToolName + " " + kToolVersion +
         " config=" + hash_hex(config.config_hash) + "\n";
}

void cmd_build_dataset(const RunConfig& config) {
  require_file(config.tweets, "tweets");
  require_file(config.labels, "labels");

  std::set<std::string> triggers;
  if (!config.triggers.empty()) {
    require_file(config.triggers, "triggers");
    triggers = corpus::load_trigger_terms(config.triggers);
  }

  auto ingest = corpus::ingest_corpus(config.tweets, config.labels);
  log_warnings(ingest.stats);
  auto resolve = corpus::resolve_labeling_dates(ingest.accounts, triggers);
  for (const auto& id : resolve.rejected_accounts)
    std::cerr << "warning: account '" << id
              << "' rejected: label 1 without trigger match or explicit "
                 "labeling date\n";

  std::vector<corpus::WindowSample> samples;
  std::vector<std::string> accounts_without_samples;
  for (const auto& account : ingest.accounts) {
    auto windows = corpus::slice_windows(account);
    if (windows.empty()) {
      accounts_without_samples.push_back(account.account_id);
      std::cerr << "warning: account '" << account.account_id
                << "' has no pre-labeling-date tweets in any window\n";
    }
    samples.insert(samples.end(), windows.begin(), windows.end());
  }

  auto split = corpus::split_accounts(ingest.accounts, config.split_seed);

  ensure_output_dir(config);
  const std::string meta = std::string(kToolName) + " " + kToolVersion +
                           " config=" + hash_hex(config.config_hash);
  corpus::write_samples(out_path(config, "samples.jsonl"), samples, meta);

  std::map<std::string, int> label_of;
  for (const auto& account : ingest.accounts)
    label_of[account.account_id] = account.label;
  std::ostringstream split_csv;
  split_csv << artifact_header(config) << "account_id,slice,label\n";
  for (const auto& account : ingest.accounts)
    split_csv << account.account_id << ","
              << split.slice_of(account.account_id) << "," << account.label
              << "\n";
  write_file(out_path(config, "split.csv"), split_csv.str());

  // Per-window class counts for the stats report.
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> window_counts;
  for (const auto& spec : corpus::window_specs())
    window_counts[spec.name()] = {0, 0};
  for (const auto& s : samples) {
    auto& [n0, n1] = window_counts[s.window.name()];
    (s.label == 1 ? n1 : n0) += 1;
  }

  std::ostringstream stats;
  stats << artifact_header(config);
  stats << "tweets_read: " << ingest.stats.tweets_read << "\n"
        << "malformed_lines: " << ingest.stats.malformed_lines << "\n"
        << "bad_timestamps: " << ingest.stats.bad_timestamps << "\n"
        << "accounts_not_in_labels: " << ingest.stats.accounts_not_in_labels
        << "\n"
        << "labeled_accounts_no_tweets: "
        << ingest.stats.labeled_accounts_no_tweets << "\n"
        << "rejected_accounts: " << resolve.rejected_accounts.size() << "\n"
        << "label0_trigger_hits: " << resolve.trigger_hits_in_label0 << "\n"
        << "accounts_kept: " << ingest.accounts.size() << "\n"
        << "accounts_without_samples: " << accounts_without_samples.size()
        << "\n"
        << "samples_total: " << samples.size() << "\n"
        << "split: train=" << split.train.size()
        << " validation=" << split.validation.size()
        << " test=" << split.test.size() << "\n"
        << "window n0 n1\n";
  for (const auto& spec : corpus::window_specs()) {
    const auto& [n0, n1] = window_counts[spec.name()];
    stats << spec.name() << " " << n0 << " " << n1 << "\n";
  }
  write_file(out_path(config, "dataset_stats.txt"), stats.str());
}

namespace {

// split.csv reader: account_id -> slice.
std::map<std::string, std::string> read_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path);
  std::map<std::string, std::string> slices;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line);
    if (row.empty() || row[0] == '#') continue;
    auto fields = split_char(row, ',');
    if (fields[0] == "account_id") continue;
    if (fields.size() < 2)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `account_id,slice,label`");
    slices[fields[0]] = fields[1];
  }
  if (slices.empty()) throw DataError(path + ": split file is empty");
  return slices;
}

struct EmbeddedDataset {
  std::vector<std::pair<std::vector<double>, int>> train, validation;
  std::vector<eval::ScoredSample> test_windows;  // score filled by caller
  std::vector<std::vector<double>> test_inputs;
  std::int64_t no_vocab_documents = 0;
};

EmbeddedDataset embed_dataset(const RunConfig& config,
                              const embed::Embedder& embedder) {
  auto samples = corpus::read_samples(out_path(config, "samples.jsonl"));
  auto slices = read_split(out_path(config, "split.csv"));

  EmbeddedDataset data;
  for (const auto& s : samples) {
    auto it = slices.find(s.account_id);
    if (it == slices.end())
      throw DataError("sample account '" + s.account_id +
                      "' missing from split file");
    auto vec = embedder.embed(s.document);
    if (vec.no_vocab) ++data.no_vocab_documents;
    if (it->second == "train") {
      data.train.emplace_back(std::move(vec.values), s.label);
    } else if (it->second == "validation") {
      data.validation.emplace_back(std::move(vec.values), s.label);
    } else if (it->second == "test") {
      eval::ScoredSample scored;
      scored.window = s.window;
      scored.label = s.label;
      data.test_windows.push_back(scored);
      data.test_inputs.push_back(std::move(vec.values));
    } else {
      throw DataError("unknown split slice '" + it->second + "' for account '" +
                      s.account_id + "'");
    }
  }
  if (data.no_vocab_documents > 0)
    std::cerr << "note: " << data.no_vocab_documents
              << " documents embedded as zero vectors (no usable tokens)\n";
  return data;
}

double score_input(const model::MlpParameters& params,
                   const std::vector<double>& input) {
  return model::forward(params, model::pad_input(input, params.d), nullptr).p1;
}

void write_formats(const RunConfig& config, const char* base,
                   const std::string& text, const std::string& csv) {
  if (config.report_format != "csv")
    write_file(out_path(config, (std::string(base) + ".txt").c_str()),
               artifact_header(config) + text);
  if (config.report_format != "text")
    write_file(out_path(config, (std::string(base) + ".csv").c_str()),
               artifact_header(config) + csv);
}

}  // namespace

void cmd_train(const RunConfig& config) {
  auto embedder = embed::make_embedder(config.embedder_id, config.vectors);
  auto data = embed_dataset(config, *embedder);

  auto result = model::train(data.train, data.validation,
                             embedder->dimension(), embedder->id(),
                             config.train);

  ensure_output_dir(config);
  model::save_model(result.params, out_path(config, "model.bin"));

  std::ostringstream log;
  log << artifact_header(config);
  log << "epoch,train_loss,validation_loss,is_best\n";
  for (const auto& e : result.log)
    log << e.epoch << "," << format_double(e.train_loss, 6) << ","
        << format_double(e.validation_loss, 6) << "," << (e.is_best ? 1 : 0)
        << "\n";
  write_file(out_path(config, "training_log.csv"), log.str());
}

void cmd_tune_and_evaluate(const RunConfig& config) {
  auto params = model::load_model(out_path(config, "model.bin"));
  auto embedder = embed::make_embedder(config.embedder_id, config.vectors);
  if (embedder->id() != params.embedder_id)
    throw DataError("model was trained with embedder '" + params.embedder_id +
                    "' but config selects '" + embedder->id() + "'");
  auto data = embed_dataset(config, *embedder);

  std::vector<double> val_scores;
  std::vector<int> val_labels;
  for (const auto& [input, label] : data.validation) {
    val_scores.push_back(score_input(params, input));
    val_labels.push_back(label);
  }
  auto curve =
      eval::tune_threshold(val_scores, val_labels, config.threshold_grid_step);
  params.threshold = curve.best_threshold;
  model::save_model(params, out_path(config, "model.bin"));

  for (std::size_t i = 0; i < data.test_windows.size(); ++i)
    data.test_windows[i].score = score_input(params, data.test_inputs[i]);

  std::vector<double> test_scores;
  std::vector<int> test_labels;
  for (const auto& s : data.test_windows) {
    test_scores.push_back(s.score);
    test_labels.push_back(s.label);
  }
  auto overall =
      eval::full_report("test", test_scores, test_labels, params.threshold);
  auto by_window = eval::evaluate_by_window(data.test_windows, params.threshold);

  write_file(out_path(config, "threshold_curve.tsv"),
             artifact_header(config) + eval::curve_to_tsv(curve));
  write_formats(config, "metrics_overall", eval::report_to_text(overall),
                eval::reports_to_csv({overall}));
  write_formats(config, "metrics_by_window", eval::reports_to_table(by_window),
                eval::reports_to_csv(by_window));
}

std::map<std::string, std::vector<corpus::Tweet>> FileTweetFetcher::fetch(
    corpus::IngestStats& stats) {
  return corpus::read_tweets(path_, stats);
}

std::vector<PredictionResult> cmd_predict(const RunConfig& config,
                                          TweetFetcher& fetcher,
                                          std::optional<std::int64_t> as_of) {
  auto params = model::load_model(out_path(config, "model.bin"));
  auto embedder = embed::make_embedder(config.embedder_id, config.vectors);
  if (embedder->id() != params.embedder_id)
    throw DataError("model was trained with embedder '" + params.embedder_id +
                    "' but config selects '" + embedder->id() + "'");

  corpus::IngestStats stats;
  auto by_account = fetcher.fetch(stats);
  log_warnings(stats);

  std::vector<PredictionResult> results;
  for (const auto& [account_id, tweets] : by_account) {
    PredictionResult r;
    r.account_id = account_id;
    r.tweets_seen = static_cast<std::int64_t>(tweets.size());
    if (tweets.empty()) {
      r.insufficient_data = true;
      results.push_back(std::move(r));
      continue;
    }
    const std::int64_t anchor =
        as_of ? *as_of : tweets.back().created_at;
    // Most recent 90-day window, anchored at as_of inclusive.
    std::string document;
    std::int64_t used = 0;
    for (const auto& t : tweets) {
      const std::int64_t offset = floor_div(anchor - t.created_at, 86400);
      if (offset < 0 || offset >= 90) continue;
      if (used > 0) document += '\n';
      document += t.text;
      ++used;
    }
    auto vec = embedder->embed(document);
    if (used == 0 || vec.no_vocab) {
      r.insufficient_data = true;
      results.push_back(std::move(r));
      continue;
    }
    auto cache =
        model::forward(params, model::pad_input(vec.values, params.d), nullptr);
    r.p_not_anti = cache.p0;
    r.p_anti = cache.p1;
    r.class_at_threshold = cache.p1 >= params.threshold ? 1 : 0;
    const int at_default = cache.p1 >= 0.5 ? 1 : 0;
    if (at_default != r.class_at_threshold) r.class_at_default = at_default;
    r.windows_used = {"[0-90)"};
    results.push_back(std::move(r));
  }

  ensure_output_dir(config);
  std::ofstream out(out_path(config, "predictions.jsonl"),
                    std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write predictions file");
  json meta;
  meta["_meta"] = std::string(kToolName) + " " + kToolVersion +
                  " config=" + hash_hex(config.config_hash);
  out << meta.dump() << "\n";
  for (const auto& r : results) {
    json j;
    j["account_id"] = r.account_id;
    j["tweets_seen"] = r.tweets_seen;
    if (r.insufficient_data) {
      j["insufficient_data"] = true;
    } else {
      j["p_not_anti"] = r.p_not_anti;
      j["p_anti"] = r.p_anti;
      j["class_at_threshold"] = r.class_at_threshold;
      j["threshold"] = params.threshold;
      if (r.class_at_default) j["class_at_default"] = *r.class_at_default;
      j["windows_used"] = r.windows_used;
    }
    out << j.dump() << "\n";
  }
  return results;
}

void cmd_analyze(const RunConfig& config) {
  require_file(config.tweets, "tweets");
  require_file(config.labels, "labels");
  require_file(config.emotion_lexicon, "emotion_lexicon");
  require_file(config.axes, "axes");
  require_file(config.vectors, "vectors");

  std::set<std::string> triggers;
  if (!config.triggers.empty()) {
    require_file(config.triggers, "triggers");
    triggers = corpus::load_trigger_terms(config.triggers);
  }
  auto ingest = corpus::ingest_corpus(config.tweets, config.labels);
  log_warnings(ingest.stats);
  corpus::resolve_labeling_dates(ingest.accounts, triggers);

  // Emotion scoring is per tweet, moral scoring per account document.
  std::vector<std::string> tweets_class0, tweets_class1;
  std::vector<std::string> accounts_class0, accounts_class1;
  for (const auto& account : ingest.accounts) {
    std::string merged;
    for (const auto& t : account.tweets) {
      if (!merged.empty()) merged += '\n';
      merged += t.text;
      (account.label == 1 ? tweets_class1 : tweets_class0).push_back(t.text);
    }
    (account.label == 1 ? accounts_class1 : accounts_class0)
        .push_back(std::move(merged));
  }

  auto freq = textlab::frequency_compare(tweets_class0, tweets_class1,
                                         config.analysis.min_count,
                                         config.analysis.smoothing);
  std::ostringstream freq_csv;
  freq_csv << artifact_header(config)
           << "token,count_class0,count_class1,rate_class0,rate_class1,skew\n";
  for (const auto& f : freq.by_abs_skew)
    freq_csv << f.token << "," << f.count_class0 << "," << f.count_class1
             << "," << format_double(f.rate_class0, 4) << ","
             << format_double(f.rate_class1, 4) << ","
             << format_double(f.skew, 6) << "\n";

  auto lexicon = textlab::load_emotion_lexicon(config.emotion_lexicon);
  auto profile0 = textlab::emotion_profile(tweets_class0, lexicon);
  auto profile1 = textlab::emotion_profile(tweets_class1, lexicon);
  std::vector<std::string> category_names;
  std::vector<std::vector<double>> emo_scores0, emo_scores1;
  for (std::size_t c = 0; c < textlab::kEmotionCategories.size(); ++c) {
    category_names.push_back(textlab::kEmotionCategories[c]);
    emo_scores0.push_back(profile0.per_document[c]);
    emo_scores1.push_back(profile1.per_document[c]);
  }
  auto emotion_rows =
      textlab::class_comparison_report(category_names, emo_scores0, emo_scores1);
  std::ostringstream emotion_csv;
  emotion_csv << artifact_header(config)
              << "category,mean_class0,mean_class1,median_class0,"
                 "median_class1,u_statistic,p_value,direction\n";
  for (std::size_t c = 0; c < emotion_rows.size(); ++c) {
    const auto& row = emotion_rows[c];
    char pbuf[64];
    std::snprintf(pbuf, sizeof(pbuf), "%.6g", row.p_value);
    emotion_csv << row.name << "," << format_double(profile0.mean[c], 6) << ","
                << format_double(profile1.mean[c], 6) << ","
                << format_double(row.median_class0, 6) << ","
                << format_double(row.median_class1, 6) << ","
                << format_double(row.u_statistic, 1) << "," << pbuf << ","
                << row.direction << "\n";
  }

  auto table = embed::load_vectors(config.vectors);
  auto axes = textlab::load_axes(config.axes, table);
  std::vector<std::string> pooled = accounts_class0;
  pooled.insert(pooled.end(), accounts_class1.begin(), accounts_class1.end());

  std::ostringstream background_csv, moral_csv;
  background_csv << artifact_header(config) << "foundation,background_bias\n";
  moral_csv << artifact_header(config)
            << "foundation,median_bias_class0,median_bias_class1,bias_u,"
               "bias_p,bias_direction,median_intensity_class0,"
               "median_intensity_class1,intensity_u,intensity_p\n";
  std::int64_t skipped_docs = 0;
  for (const auto& axis : axes) {
    const double background = textlab::background_bias(pooled, axis, table);
    background_csv << axis.foundation << "," << format_double(background, 6)
                   << "\n";

    auto score_class = [&](const std::vector<std::string>& docs,
                           std::vector<double>& bias,
                           std::vector<double>& intensity) {
      for (const auto& doc : docs) {
        auto s = textlab::frameaxis_score(doc, axis, table, background);
        if (s.no_vocab) {
          ++skipped_docs;
          continue;
        }
        bias.push_back(s.bias);
        intensity.push_back(s.intensity);
      }
    };
    std::vector<double> bias0, bias1, intensity0, intensity1;
    score_class(accounts_class0, bias0, intensity0);
    score_class(accounts_class1, bias1, intensity1);
    if (bias0.empty() || bias1.empty())
      throw DataError("axis '" + axis.foundation +
                      "': a class has no scoreable document");

    auto bias_rows = textlab::class_comparison_report({axis.foundation},
                                                      {bias0}, {bias1});
    auto intensity_rows = textlab::class_comparison_report(
        {axis.foundation}, {intensity0}, {intensity1});
    const auto& b = bias_rows[0];
    const auto& i = intensity_rows[0];
    char bp[64], ip[64];
    std::snprintf(bp, sizeof(bp), "%.6g", b.p_value);
    std::snprintf(ip, sizeof(ip), "%.6g", i.p_value);
    moral_csv << axis.foundation << "," << format_double(b.median_class0, 6)
              << "," << format_double(b.median_class1, 6) << ","
              << format_double(b.u_statistic, 1) << "," << bp << ","
              << b.direction << "," << format_double(i.median_class0, 6)
              << "," << format_double(i.median_class1, 6) << ","
              << format_double(i.u_statistic, 1) << "," << ip << "\n";
  }
  if (skipped_docs > 0)
    std::cerr << "note: " << skipped_docs
              << " account documents had no in-vocabulary token for some axis "
                 "and were skipped\n";

  ensure_output_dir(config);
  write_file(out_path(config, "frequency_comparison.csv"), freq_csv.str());
  write_file(out_path(config, "emotion_profiles.csv"), emotion_csv.str());
  write_file(out_path(config, "moral_profiles.csv"), moral_csv.str());
  write_file(out_path(config, "background_bias.csv"), background_csv.str());
}

}  // namespace stancecast::pipeline
