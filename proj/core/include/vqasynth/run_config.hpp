#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vqasynth/corpus.hpp"
#include "vqasynth/gsc.hpp"
#include "vqasynth/model_gateway.hpp"
#include "vqasynth/pipelines.hpp"
#include "vqasynth/triplet.hpp"
#include "vqasynth/vision_annotator.hpp"

namespace vqasynth::runner {

struct ModelParams {
  bool use_8_bit = false;
  std::string device = "cuda";
  bool low_cpu = true;
};

struct ModelConfig {
  std::string name;
  std::string path;
  std::string family;
  ModelParams params;
};

struct DatasetConfig {
  std::string name;
  std::size_t count = 0;
  bool use_scene_graph = false;
  std::filesystem::path images_dir;
  std::filesystem::path scene_graphs;
  corpus::AreaThreshold threshold;
};

struct RunParams {
  std::size_t num_per_inference = 1;
  bool use_img_ext = true;
  std::vector<std::string> q_prefix;
  std::vector<int> q_prefix_prop;
  bool prefix_hardcoded = false;
};

struct BackendConfig {
  enum class Kind { kMock, kRemote };
  Kind kind = Kind::kMock;
  std::string url;                    // remote; falls back to VQASYNTH_BACKEND_URL
  std::string api_token;              // from VQASYNTH_API_TOKEN
  std::filesystem::path script;       // mock reply table, optional
  std::string embedding_model;
  std::size_t embedding_dim = 256;
  int latency_ms = 0;                 // mock only
};

struct RunConfig {
  // Keys shared with the published experiment configs.
  std::string test_name;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  ModelConfig model;
  std::string prompt;
  RunParams run_params;

  // Extensions.
  PipelineKind pipeline = PipelineKind::kSingleStep;
  std::filesystem::path templates_dir;
  std::filesystem::path output_dir;
  gateway::DecodingParams decoding;
  pipelines::StageBudgets budgets;
  std::size_t parallelism = 4;
  pipelines::SimilarityMode similarity = pipelines::SimilarityMode::kEmbedding;
  BackendConfig backend;
  gateway::RetryPolicy retry;
  bool require_question_mark = true;
  std::optional<std::vector<std::string>> banned_phrases;
  std::vector<std::string> vip_blocklist;
  vision::AnnotationStyle annotation;
  std::optional<std::size_t> expected_total;

  // Unknown keys seen while loading, as dotted paths.
  std::vector<std::string> warnings;
};

// Pipeline implied by a template-set name.
std::optional<PipelineKind> pipeline_for_prompt(std::string_view prompt_set);

// Directory holding the shipped templates.
std::filesystem::path default_template_dir();

// Parses and validates. Relative paths resolve against `base_dir`. Throws
// ConfigError naming the offending key.
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vqasynth::runner
