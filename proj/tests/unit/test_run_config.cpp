#include <gtest/gtest.h>

#include <cstdlib>

#include "test_support.hpp"
#include "vqasynth/errors.hpp"
#include "vqasynth/prompt_kit.hpp"
#include "vqasynth/run_config.hpp"

namespace vqasynth::runner {
namespace {

using testing::fixture;

std::string minimal(const std::string& extra = "", const std::string& dataset_extra = "") {
  return "test_name: t\nseed: 1\ndataset:\n  count: 3\n" + dataset_extra + "prompt: singlestep-optim\n" + extra;
}

std::string error_path(const std::string& yaml) {
  try {
    parse_run_config(yaml, "/base");
  } catch (const ConfigError& e) {
    return e.field_path();
  }
  return "<no error>";
}

TEST(RunConfig, PublishedSingleStepConfig) {
  const auto c = load_run_config(fixture("runs/published_singlestep_7b.yaml"));
  EXPECT_EQ(c.test_name, "Single-Step-7B");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.dataset.name, "GQA");
  EXPECT_EQ(c.dataset.count, 167u);
  EXPECT_FALSE(c.dataset.use_scene_graph);
  EXPECT_EQ(c.model.name, "llava-hf/llava-1.5-7b-hf");
  EXPECT_EQ(c.model.family, "llava");
  EXPECT_FALSE(c.model.params.use_8_bit);
  EXPECT_EQ(c.model.params.device, "cuda");
  EXPECT_TRUE(c.model.params.low_cpu);
  EXPECT_EQ(c.prompt, "singlestep-optim");
  EXPECT_EQ(c.pipeline, PipelineKind::kSingleStep);
  EXPECT_EQ(c.run_params.num_per_inference, 3u);
  EXPECT_TRUE(c.run_params.use_img_ext);
  EXPECT_EQ(c.run_params.q_prefix, prompt::default_prefixes());
  EXPECT_EQ(c.run_params.q_prefix_prop, (std::vector<int>{3, 2, 1, 1, 1}));
  EXPECT_FALSE(c.run_params.prefix_hardcoded);
  EXPECT_TRUE(c.warnings.empty());
  EXPECT_EQ(c.output_dir, fixture("runs/output/Single-Step-7B").lexically_normal());
}

TEST(RunConfig, PublishedVipConfigUsesHardcodedPool) {
  const auto c = load_run_config(fixture("runs/published_vip.yaml"));
  EXPECT_EQ(c.pipeline, PipelineKind::kSingleStepVip);
  EXPECT_TRUE(c.dataset.use_scene_graph);
  EXPECT_TRUE(c.run_params.prefix_hardcoded);
  EXPECT_EQ(c.run_params.q_prefix, prompt::vip_prefixes());
  EXPECT_EQ(c.run_params.q_prefix_prop, (std::vector<int>{2, 2, 2, 1, 1}));
}

TEST(RunConfig, PrefixLengthMismatchNamesKey) {
  EXPECT_EQ(error_path(minimal("run_params:\n  q_prefix: [a, b]\n  q_prefix_prop: [1]\n")), "run_params.q_prefix_prop");
  EXPECT_EQ(error_path(minimal("run_params:\n  q_prefix: [a, b]\n")), "run_params.q_prefix_prop");
  EXPECT_EQ(error_path(minimal("run_params:\n  q_prefix: [a]\n  q_prefix_prop: [0]\n")), "run_params.q_prefix_prop[0]");
}

TEST(RunConfig, VipBlocklist) {
  const std::string base = "dataset:\n  count: 1\nprompt: nonvis-optim\n";
  EXPECT_EQ(error_path(base + "run_params:\n  q_prefix: [what, why]\n  q_prefix_prop: [1, 1]\n"), "run_params.q_prefix");
  EXPECT_EQ(error_path(base + "run_params:\n  q_prefix: [what, how many]\n  q_prefix_prop: [1, 1]\n"), "<no error>");
  EXPECT_EQ(error_path(base + "run_params:\n  q_prefix: [what, how many]\n  q_prefix_prop: [1, 1]\n  vip_blocklist: [how many]\n"),
            "run_params.q_prefix");
  // The blocklist only applies to visual-prompt runs.
  EXPECT_EQ(error_path(minimal("run_params:\n  q_prefix: [why]\n  q_prefix_prop: [1]\n")), "<no error>");
}

TEST(RunConfig, UnknownKeysWarn) {
  const auto c = parse_run_config(minimal("colour: red\ndataset_extra: 1\nmodel:\n  name: x\n  quantize: 4\n"), "/base");
  EXPECT_EQ(c.warnings, (std::vector<std::string>{"colour", "dataset_extra", "model.quantize"}));
}

TEST(RunConfig, RelativePathsResolveAgainstConfigDir) {
  const auto c = parse_run_config(
      minimal("output_dir: ../out\nbackend:\n  script: s.json\n",
              "  images_dir: imgs\n  scene_graphs: /abs/sg.json\n"),
      "/base/configs");
  EXPECT_EQ(c.dataset.images_dir, "/base/configs/imgs");
  EXPECT_EQ(c.dataset.scene_graphs, "/abs/sg.json");
  EXPECT_EQ(c.output_dir, "/base/out");
  EXPECT_EQ(c.backend.script, "/base/configs/s.json");
}

TEST(RunConfig, TypedErrors) {
  EXPECT_EQ(error_path("prompt: singlestep-optim\n"), "dataset");
  EXPECT_EQ(error_path("dataset:\n  name: x\nprompt: singlestep-optim\n"), "dataset.count");
  EXPECT_EQ(error_path("dataset:\n  count: -1\nprompt: singlestep-optim\n"), "dataset.count");
  EXPECT_EQ(error_path("dataset:\n  count: 1\n"), "prompt");
  EXPECT_EQ(error_path("dataset:\n  count: 1\nprompt: nope\n"), "prompt");
  EXPECT_EQ(error_path(minimal("run_params:\n  num_per_inference: 0\n")), "run_params.num_per_inference");
  EXPECT_EQ(error_path(minimal("run_params:\n  use_img_ext: maybe\n")), "run_params.use_img_ext");
  EXPECT_EQ(error_path(minimal("decoding:\n  top_p: 0\n")), "decoding");
  EXPECT_EQ(error_path(minimal("similarity: cosine\n")), "similarity");
  EXPECT_EQ(error_path(minimal("pipeline: multi-step\n")), "pipeline");
  EXPECT_EQ(error_path("dataset:\n  count: 1\npipeline: warp\n"), "pipeline");
  EXPECT_EQ(parse_run_config("dataset:\n  count: 1\npipeline: multi-step\n", "/b").prompt, "self_consistency");
  EXPECT_EQ(error_path(minimal("backend:\n  kind: grpc\n")), "backend.kind");
  EXPECT_EQ(error_path(minimal("", "  min_area_fraction: 2\n")), "dataset.min_area_fraction");
  EXPECT_EQ(error_path(minimal("annotation:\n  color: [1, 2]\n")), "annotation.color");
  EXPECT_EQ(error_path("[1, 2]"), "<document>");
  EXPECT_THROW(load_run_config(fixture("runs/none.yaml")), ConfigError);
}

TEST(RunConfig, RemoteNeedsUrl) {
  ::unsetenv("VQASYNTH_BACKEND_URL");
  EXPECT_EQ(error_path(minimal("backend:\n  kind: remote\n")), "backend.url");
  ::setenv("VQASYNTH_BACKEND_URL", "http://127.0.0.1:9", 1);
  const auto c = parse_run_config(minimal("backend:\n  kind: remote\n"), "/base");
  EXPECT_EQ(c.backend.url, "http://127.0.0.1:9");
  ::unsetenv("VQASYNTH_BACKEND_URL");
}

TEST(RunConfig, ExtensionsAndDefaults) {
  const auto d = parse_run_config(minimal(), "/base");
  EXPECT_EQ(d.decoding, gateway::DecodingParams{});
  EXPECT_EQ(d.budgets.explanation_react, 300);
  EXPECT_EQ(d.parallelism, 4u);
  EXPECT_TRUE(d.run_params.prefix_hardcoded);
  EXPECT_EQ(d.dataset.threshold.value, 0.02);
  EXPECT_FALSE(d.expected_total.has_value());

  const auto c = parse_run_config(
      minimal("budgets:\n  question: 12\n"
              "similarity: unigram\nexpected_total: 20501\nvalidity:\n  require_question_mark: false\n"
              "  banned_phrases: [box]\nannotation:\n  color: [0, 0, 255]\n  thickness: 5\n",
              "  min_area_pixels: 64\n"),
      "/base");
  EXPECT_EQ(c.budgets.question, 12);
  EXPECT_EQ(c.dataset.threshold.mode, corpus::AreaThreshold::Mode::kPixels);
  EXPECT_EQ(c.similarity, pipelines::SimilarityMode::kUnigram);
  EXPECT_EQ(c.expected_total, 20501u);
  EXPECT_FALSE(c.require_question_mark);
  EXPECT_EQ(c.banned_phrases, (std::vector<std::string>{"box"}));
  EXPECT_EQ(c.annotation.color, (vision::Rgb{0, 0, 255}));
  EXPECT_EQ(c.annotation.thickness, 5);
}

TEST(RunConfig, PipelineFromPromptSet) {
  EXPECT_EQ(pipeline_for_prompt("singlestep-optim"), PipelineKind::kSingleStep);
  EXPECT_EQ(pipeline_for_prompt("nonvis-optim"), PipelineKind::kSingleStepVip);
  EXPECT_EQ(pipeline_for_prompt("self_consistency"), PipelineKind::kMultiStep);
  EXPECT_FALSE(pipeline_for_prompt("other").has_value());
  EXPECT_TRUE(std::filesystem::is_directory(default_template_dir()));
}

}  // namespace
}  // namespace vqasynth::runner
