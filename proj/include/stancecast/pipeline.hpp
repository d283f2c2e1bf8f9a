#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stancecast/common.hpp"
#include "stancecast/corpus.hpp"
#include "stancecast/embed.hpp"
#include "stancecast/eval.hpp"
#include "stancecast/model.hpp"

// Command layer: one run-configuration file drives dataset construction,
// training, threshold tuning, evaluation, prediction and corpus analysis.
// Artifacts land in the configured output directory; every textual artifact
// starts with a header carrying the tool version and the config hash.

namespace stancecast::pipeline {

struct AnalysisConfig {
  std::int64_t min_count = 1;
  double smoothing = 1.0;  // per-million-token units
};

struct RunConfig {
  // Input paths. Only the ones a command consumes must exist.
  std::string tweets;
  std::string labels;
  std::string triggers;         // optional; empty set when unset
  std::string vectors;          // word-vector file (wordvec embedder, axes)
  std::string emotion_lexicon;
  std::string axes;
  std::string valence_lexicon;  // reserved for ablation experiments
  std::string domain_ratings;   // reserved for ablation experiments
  std::string antivax_accounts; // reserved for ablation experiments
  std::string output_dir = "out";

  std::string embedder_id = "hashed:64:1";
  std::uint64_t split_seed = 7;
  model::TrainConfig train;
  double threshold_grid_step = 1e-4;
  std::string report_format = "both";  // text | csv | both
  AnalysisConfig analysis;

  std::uint64_t config_hash = 0;  // FNV-1a over the raw config file bytes
};

// JSON config file; unknown keys are rejected to catch typos.
RunConfig load_config(const std::string& path);

// "# stancecast <version> config=<hex hash>"
std::string artifact_header(const RunConfig& config);

// samples.jsonl + split.csv + dataset_stats.txt
void cmd_build_dataset(const RunConfig& config);

// model.bin (threshold 0.5 until tuned) + training_log.csv
void cmd_train(const RunConfig& config);

// threshold_curve.tsv + metrics_overall.{txt,csv} +
// metrics_by_window.{txt,csv}; freezes the tuned threshold into model.bin.
void cmd_tune_and_evaluate(const RunConfig& config);

struct PredictionResult {
  std::string account_id;
  double p_not_anti = 0.0;
  double p_anti = 0.0;
  int class_at_threshold = 0;
  // Present only when the 0.5 default disagrees with the tuned threshold.
  std::optional<int> class_at_default;
  std::vector<std::string> windows_used;
  std::int64_t tweets_seen = 0;
  bool insufficient_data = false;
};

// Source of per-account tweets for prediction. File input is the only
// shipped implementation; a live client can plug in without touching the
// pipeline.
class TweetFetcher {
 public:
  virtual ~TweetFetcher() = default;
  virtual std::map<std::string, std::vector<corpus::Tweet>> fetch(
      corpus::IngestStats& stats) = 0;
};

class FileTweetFetcher final : public TweetFetcher {
 public:
  explicit FileTweetFetcher(std::string path) : path_(std::move(path)) {}
  std::map<std::string, std::vector<corpus::Tweet>> fetch(
      corpus::IngestStats& stats) override;

 private:
  std::string path_;
};

// Scores each fetched account over its most recent [0-90) window, anchored
// at as_of (default: the account's latest tweet). Also writes
// predictions.jsonl to the output directory.
std::vector<PredictionResult> cmd_predict(
    const RunConfig& config, TweetFetcher& fetcher,
    std::optional<std::int64_t> as_of = std::nullopt);

// frequency_comparison.csv + emotion_profiles.csv + moral_profiles.csv +
// background_bias.csv
void cmd_analyze(const RunConfig& config);

}  // namespace stancecast::pipeline
