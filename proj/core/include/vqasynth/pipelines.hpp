#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vqasynth/corpus.hpp"
#include "vqasynth/gsc.hpp"
#include "vqasynth/model_gateway.hpp"
#include "vqasynth/prompt_kit.hpp"
#include "vqasynth/quality_metrics.hpp"
#include "vqasynth/triplet.hpp"
#include "vqasynth/vision_annotator.hpp"

namespace vqasynth::pipelines {

// Token budgets for the multi-step stages.
struct StageBudgets {
  int question = 20;
  int answer = 25;
  int explanation_base = 70;
  int explanation_cot = 70;
  int explanation_react = 300;
};

// Everything a pipeline needs for one run. Pointers are borrowed and must
// outlive the run.
struct PipelineContext {
  PipelineKind kind = PipelineKind::kSingleStep;
  gateway::ModelGateway* gateway = nullptr;
  const corpus::Corpus* corpus = nullptr;
  const prompt::TemplateSet* templates = nullptr;
  const prompt::PrefixSchedule* schedule = nullptr;  // indexed by plan position
  gateway::DecodingParams params;                     // single-step decoding
  StageBudgets budgets;
  std::uint64_t run_seed = 0;
  bool attach_image = true;
  corpus::AreaThreshold threshold;
  vision::AnnotationStyle style;
  SimilarityMode similarity = SimilarityMode::kEmbedding;
  quality::ValidityRules rules;
  std::string tag_prefix;  // prepended to request tags
};

Record run_single_step(const corpus::PlanEntry& entry, const PipelineContext& ctx);
Record run_single_step_vip(const corpus::PlanEntry& entry, const PipelineContext& ctx);
Record run_multi_step(const corpus::PlanEntry& entry, const PipelineContext& ctx);

// Dispatches on ctx.kind and fills meta.duration_ms.
Record run_entry(const corpus::PlanEntry& entry, const PipelineContext& ctx);

// Object for a visual-prompt slot: the surviving objects are permuted once
// per image with a seed derived from the run seed, and slot j takes the
// j-th element, wrapping around when the image has fewer objects than slots.
std::optional<corpus::SceneGraphObject> pick_object(const corpus::ImageRecord& record,
                                                    const corpus::AreaThreshold& threshold,
                                                    std::uint64_t run_seed, std::size_t slot);

// First non-empty line with an echoed leading label ("Question:", ...)
// removed.
std::string first_line_value(std::string_view raw, std::initializer_list<std::string_view> labels);

struct RunPlanOptions {
  std::size_t workers = 4;
  // Records already produced by an earlier attempt, keyed by plan index.
  std::map<std::size_t, Record> completed;
  // Called once per newly produced record, serialized, in completion order.
  std::function<void(const Record&)> on_record;
};

// Runs every plan entry on a bounded worker pool. The result is ordered by
// plan index and has exactly one record per entry.
std::vector<Record> run_plan(const corpus::SamplingPlan& plan, const PipelineContext& ctx,
                             RunPlanOptions options = {});

}  // namespace vqasynth::pipelines
