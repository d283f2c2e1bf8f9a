#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stancecast/pipeline.hpp"

namespace {

using namespace stancecast;

void print_predictions(const std::vector<pipeline::PredictionResult>& results) {
  for (const auto& r : results) {
    if (r.insufficient_data) {
      std::cout << r.account_id << ": insufficient data (" << r.tweets_seen
                << (r.tweets_seen == 1 ? " tweet seen)\n" : " tweets seen)\n");
      continue;
    }
    std::cout << r.account_id << ": p_not_anti=" << format_double(r.p_not_anti, 4)
              << " p_anti=" << format_double(r.p_anti, 4)
              << " class=" << r.class_at_threshold;
    if (r.class_at_default)
      std::cout << " (class at default 0.5: " << *r.class_at_default << ")";
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"windowed tweet-corpus classifier and analysis pipeline"};
  app.set_version_flag("--version",
                       std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string output_override;
  std::string format_override;
  std::string predict_input;
  std::string as_of_str;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file (JSON)")
        ->required();
    sub->add_option("--seed", seed_override,
                    "override split and training seeds");
    sub->add_option("--output", output_override, "override output directory");
    sub->add_option("--format", format_override, "report format")
        ->check(CLI::IsMember({"text", "csv"}));
  };

  auto* build = app.add_subcommand(
      "build-dataset", "ingest corpus, slice windows, split accounts");
  add_common(build);
  auto* train = app.add_subcommand("train", "train the classifier");
  add_common(train);
  auto* tune = app.add_subcommand(
      "tune-eval", "tune the threshold on validation, evaluate on test");
  add_common(tune);
  auto* predict =
      app.add_subcommand("predict", "score accounts from a tweet file");
  add_common(predict);
  predict->add_option("--input", predict_input, "account tweets file (JSONL)")
      ->required();
  predict->add_option("--as-of", as_of_str,
                      "anchor timestamp (ISO-8601; default: latest tweet)");
  auto* analyze = app.add_subcommand(
      "analyze", "word frequency, emotion and moral-axis comparison");
  add_common(analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    pipeline::RunConfig config = pipeline::load_config(config_path);
    if (seed_override) {
      config.split_seed = *seed_override;
      config.train.seed = *seed_override;
    }
    if (!output_override.empty()) config.output_dir = output_override;
    if (!format_override.empty()) config.report_format = format_override;

    if (build->parsed()) {
      pipeline::cmd_build_dataset(config);
    } else if (train->parsed()) {
      pipeline::cmd_train(config);
    } else if (tune->parsed()) {
      pipeline::cmd_tune_and_evaluate(config);
    } else if (predict->parsed()) {
      std::optional<std::int64_t> as_of;
      if (!as_of_str.empty()) {
        as_of = parse_iso8601(as_of_str);
        if (!as_of)
          throw UsageError("--as-of: unparsable timestamp '" + as_of_str + "'");
      }
      pipeline::FileTweetFetcher fetcher(predict_input);
      print_predictions(pipeline::cmd_predict(config, fetcher, as_of));
    } else if (analyze->parsed()) {
      pipeline::cmd_analyze(config);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
