#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vqasynth/errors.hpp"
#include "vqasynth/quality_metrics.hpp"
#include "vqasynth/records.hpp"
#include "vqasynth/review_service.hpp"
#include "vqasynth/runner.hpp"
#include "vqasynth/score_store.hpp"
#include "vqasynth/util.hpp"

namespace fs = std::filesystem;
using namespace vqasynth;

namespace {

runner::ReviewService* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

// Reference corpora may be full dataset records or bare
// {"question", "answer", "explanation"} lines.
std::vector<Triplet> read_triplets(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Triplet> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetFormatError(n, e.what());
    }
    if (j.contains("status")) {
      auto r = records::from_json_line(line, n);
      if (r.status == SlotStatus::kValid) out.push_back(std::move(r.triplet));
      continue;
    }
    Triplet t;
    try {
      t.question = j.at("question").get<std::string>();
      t.answer = j.at("answer").get<std::string>();
      t.explanation = j.at("explanation").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw DatasetFormatError(n, e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("--bind expects host:port");
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesize and evaluate VQA-NLE triplets"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* gen = app.add_subcommand("generate", "Run a generation config");
  std::string config_path;
  std::string gen_out;
  bool no_resume = false;
  gen->add_option("--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory; overrides output_dir");
  gen->add_flag("--no-resume", no_resume, "Ignore a partial earlier run");

  auto* eval = app.add_subcommand("evaluate", "Length-distribution similarity against a reference corpus");
  std::string eval_dataset, eval_reference, eval_out;
  bool eval_json = false;
  eval->add_option("--dataset", eval_dataset, "Generated dataset (JSONL)")->required()->check(CLI::ExistingFile);
  eval->add_option("--reference", eval_reference, "Reference triplets (JSONL)")->required()->check(CLI::ExistingFile);
  eval->add_flag("--json", eval_json, "Print JSON instead of a table");
  eval->add_option("--out", eval_out, "Write the JSON report here");

  auto* stats = app.add_subcommand("stats", "Corpus statistics, validity and efficiency");
  std::string stats_dataset, stats_manifest, stats_invalid, stats_out;
  std::optional<std::size_t> stats_expected;
  std::optional<double> stats_seconds, stats_baseline;
  bool stats_json = false;
  stats->add_option("--dataset", stats_dataset, "Dataset (JSONL)")->required()->check(CLI::ExistingFile);
  stats->add_option("--invalid", stats_invalid, "Invalid ledger; defaults to invalid.jsonl next to the dataset");
  stats->add_option("--manifest", stats_manifest, "Run manifest; defaults to manifest.json next to the dataset");
  stats->add_option("--expected", stats_expected, "Expected slot count");
  stats->add_option("--seconds", stats_seconds, "Total generation time in seconds");
  stats->add_option("--baseline", stats_baseline, "Baseline seconds per valid triplet");
  stats->add_flag("--json", stats_json, "Print JSON instead of a table");
  stats->add_option("--out", stats_out, "Write the JSON report here");

  auto* review = app.add_subcommand("review", "Serve the review API");
  std::string review_dataset, review_images, review_bind = "127.0.0.1:8080", review_scores;
  review->add_option("--dataset", review_dataset, "Dataset (JSONL)")->required()->check(CLI::ExistingFile);
  review->add_option("--images", review_images, "Image directory")->required()->check(CLI::ExistingDirectory);
  review->add_option("--bind", review_bind, "host:port")->capture_default_str();
  review->add_option("--scores", review_scores, "Score log; defaults to scores.jsonl next to the dataset");

  auto* exp = app.add_subcommand("export-scores", "Write per-rater criterion means as CSV");
  std::string export_out, export_scores = "scores.jsonl";
  bool export_agreement = false;
  exp->add_option("--out", export_out, "CSV destination")->required();
  exp->add_option("--scores", export_scores, "Score log")->capture_default_str();
  exp->add_flag("--agreement", export_agreement, "Also print agreement JSON");

  CLI11_PARSE(app, argc, argv);
  // Logs go to stderr so report output on stdout stays machine-readable.
  spdlog::set_default_logger(spdlog::stderr_color_mt("vqasynth"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*gen) {
      runner::RunOptions opts;
      opts.resume = !no_resume;
      auto config = runner::load_run_config(config_path);
      if (!gen_out.empty()) config.output_dir = gen_out;
      const auto result = runner::run(config, opts);
      const auto& m = result.manifest;
      std::printf("%s: valid %zu, invalid %zu, skipped %zu of %zu slots; %s", m.test_name.c_str(), m.valid, m.invalid,
                  m.skipped, m.plan_size, quality::format_duration(m.total_seconds).c_str());
      if (m.seconds_per_valid) std::printf(", %.2fs per valid triplet", *m.seconds_per_valid);
      std::printf("\n%s\n", result.outputs.dataset.string().c_str());
      return 0;
    }

    if (*eval) {
      const auto synthetic = read_triplets(eval_dataset);
      const auto reference = read_triplets(eval_reference);
      const auto report = quality::similarity_report(synthetic, reference);
      if (!eval_out.empty()) write_file_atomic(eval_out, runner::similarity_to_json(report));
      std::cout << (eval_json ? runner::similarity_to_json(report) : runner::similarity_to_table(report));
      return 0;
    }

    if (*stats) {
      const fs::path dir = fs::path(stats_dataset).parent_path();
      auto recs = records::read_dataset(stats_dataset);
      if (stats_invalid.empty() && fs::exists(dir / "invalid.jsonl")) stats_invalid = (dir / "invalid.jsonl").string();
      if (!stats_invalid.empty() && fs::path(stats_invalid) != fs::path(stats_dataset)) {
        auto more = records::read_dataset(stats_invalid);
        recs.insert(recs.end(), more.begin(), more.end());
      }
      if (stats_manifest.empty() && fs::exists(dir / "manifest.json")) stats_manifest = (dir / "manifest.json").string();
      if (!stats_manifest.empty()) {
        const auto m = runner::manifest_from_json(read_file(stats_manifest));
        if (!stats_expected) stats_expected = m.expected_total;
        if (!stats_seconds) stats_seconds = m.total_seconds;
      }
      const auto report = runner::compute_stats(recs, stats_expected, stats_seconds, stats_baseline);
      if (!stats_out.empty()) write_file_atomic(stats_out, runner::stats_to_json(report));
      std::cout << (stats_json ? runner::stats_to_json(report) : runner::stats_to_table(report));
      return 0;
    }

    if (*review) {
      runner::ReviewOptions opts;
      opts.dataset = review_dataset;
      opts.images_dir = review_images;
      opts.scores = review_scores.empty() ? fs::path(review_dataset).parent_path() / "scores.jsonl"
                                          : fs::path(review_scores);
      runner::ReviewService service(opts);
      const auto [host, port] = split_bind(review_bind);
      const int bound = service.bind(host, port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("serving %zu triplets on http://%s:%d\n", service.triplet_count(), host.c_str(), bound);
      std::fflush(stdout);
      service.serve();
      g_service = nullptr;
      return 0;
    }

    if (*exp) {
      runner::ScoreStore store(export_scores);
      const auto scores = store.resolved();
      write_or_print(export_out, runner::scores_to_csv(scores));
      if (export_agreement) std::cout << runner::agreement_to_json(runner::summarize_agreement(scores)) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    spdlog::error("config error at {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
