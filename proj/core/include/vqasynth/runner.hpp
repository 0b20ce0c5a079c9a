#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vqasynth/model_gateway.hpp"
#include "vqasynth/quality_metrics.hpp"
#include "vqasynth/run_config.hpp"
#include "vqasynth/triplet.hpp"

namespace vqasynth::runner {

struct SlotOutcome {
  std::size_t index = 0;
  std::string image_id;
  std::size_t slot = 0;
  SlotStatus status = SlotStatus::kValid;
  Reason reason = Reason::kNone;
  std::string stage;
  double duration_ms = 0.0;
};

struct RunManifest {
  std::string test_name;
  std::string config_fingerprint;
  std::string pipeline;
  std::string model;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;  // empty while running
  bool complete = false;
  std::size_t plan_size = 0;
  std::size_t expected_total = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::size_t skipped = 0;
  std::size_t resumed = 0;  // slots taken from an earlier partial run
  double total_seconds = 0.0;
  std::optional<double> seconds_per_valid;
  gateway::GatewayStats gateway;
  std::vector<SlotOutcome> ledger;
};

struct RunOutputs {
  std::filesystem::path dataset;   // valid records
  std::filesystem::path invalid;   // invalid and skipped records
  std::filesystem::path manifest;
  std::filesystem::path journal;   // present only while a run is incomplete
};

RunOutputs output_paths(const std::filesystem::path& output_dir);

struct RunOptions {
  bool resume = true;
  // Overrides the backend named in the configuration (tests, embedding apps).
  std::shared_ptr<gateway::GenerationBackend> backend;
  std::shared_ptr<gateway::EmbeddingProvider> embedder;
};

struct RunResult {
  RunManifest manifest;
  std::vector<Record> records;  // every slot, plan order
  RunOutputs outputs;
};

// Stable hash of the settings that determine the generated records.
std::string config_fingerprint(const RunConfig& config);

RunResult run(const RunConfig& config, const RunOptions& options = {});
RunResult run_from_config(const std::filesystem::path& config_path, const RunOptions& options = {});

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Reports

struct StatsReport {
  quality::CorpusStats stats;
  std::size_t duplicates = 0;
  quality::RougeSummary rouge;
  std::optional<quality::EfficiencyReport> efficiency;
};

// `records` may mix valid and invalid entries; only valid ones count as
// triplets. Expected defaults to the record count.
StatsReport compute_stats(const std::vector<Record>& records, std::optional<std::size_t> expected = {},
                          std::optional<double> total_seconds = {}, std::optional<double> baseline_tbar = {});

std::string stats_to_json(const StatsReport& r);
std::string stats_to_table(const StatsReport& r);

std::string similarity_to_json(const quality::SimilarityReport& r);
std::string similarity_to_table(const quality::SimilarityReport& r);

}  // namespace vqasynth::runner
