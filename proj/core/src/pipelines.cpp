#include "vqasynth/pipelines.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <spdlog/spdlog.h>

#include "vqasynth/errors.hpp"
#include "vqasynth/image.hpp"
#include "vqasynth/triplet_parser.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::pipelines {

namespace {

Record start_record(const corpus::PlanEntry& entry, const PipelineContext& ctx, PipelineKind kind) {
  Record r;
  r.index = entry.index;
  r.image_id = entry.image_id;
  r.slot = entry.slot;
  auto& m = r.triplet.meta;
  m.image_id = entry.image_id;
  m.pipeline = kind;
  m.model = ctx.gateway->model_handle();
  m.seed = derive_seed(ctx.run_seed, entry.image_id, entry.slot);
  if (ctx.schedule != nullptr && entry.index < ctx.schedule->size()) m.prefix = ctx.schedule->prefix_at(entry.index);
  return r;
}

void mark_invalid(Record& r, Reason reason, std::string stage, std::string detail) {
  r.status = SlotStatus::kInvalid;
  r.reason = reason;
  r.stage = std::move(stage);
  r.detail = std::move(detail);
}

const corpus::ImageRecord& image_of(const corpus::PlanEntry& entry, const PipelineContext& ctx) {
  const auto* rec = ctx.corpus->find(entry.image_id);
  if (rec == nullptr) throw CorpusError("plan references unknown image '" + entry.image_id + "'");
  return *rec;
}

const prompt::PromptTemplate& stage_template(const PipelineContext& ctx, prompt::Stage stage) {
  const auto* t = ctx.templates->find_stage(stage);
  if (t == nullptr) {
    throw TemplateError("template set '" + ctx.templates->name + "' has no " + std::string(prompt::to_string(stage)) +
                        " template");
  }
  return *t;
}

// Generates through the gateway; on failure marks `r` invalid and returns false.
bool call(const PipelineContext& ctx, Record& r, const prompt::PromptTemplate& tmpl, const prompt::Bindings& bindings,
          const std::optional<std::string>& image, int max_new_tokens, std::string_view stage, std::string& out) {
  gateway::GenerationRequest req;
  req.prompt = prompt::render_prompt(tmpl, bindings);
  req.image_base64 = image;
  req.params = ctx.params;
  req.params.max_new_tokens = max_new_tokens;
  req.template_id = tmpl.id();
  req.slot_key = r.image_id + "#" + std::to_string(r.slot);
  req.tag = ctx.tag_prefix + req.slot_key + "/" + std::string(stage);
  req.seed = r.triplet.meta.seed;
  try {
    out = ctx.gateway->generate(req);
  } catch (const TransportError& e) {
    mark_invalid(r, Reason::kTransportError, std::string(stage), e.what());
    return false;
  } catch (const BackendError& e) {
    mark_invalid(r, Reason::kBackendError, std::string(stage), e.what());
    return false;
  }
  r.triplet.meta.raw.push_back(out);
  return true;
}

void apply_verdict(Record& r, const PipelineContext& ctx) {
  const auto verdict = quality::validate_triplet(r.triplet, ctx.rules);
  if (!verdict.valid()) mark_invalid(r, verdict.reason, verdict.field, verdict.detail);
}

void apply_parse(Record& r, const PipelineContext& ctx, const std::string& raw) {
  const auto parsed = parse_triplet(raw, Dialect::kEither);
  if (const auto* f = std::get_if<ParseFailure>(&parsed)) {
    mark_invalid(r, f->reason, f->field, f->detail);
    return;
  }
  const auto& fields = std::get<ParsedFields>(parsed);
  r.triplet.question = fields.question;
  r.triplet.answer = fields.answer;
  r.triplet.explanation = fields.explanation;
  apply_verdict(r, ctx);
}

std::string strip_label(std::string_view line, std::initializer_list<std::string_view> labels) {
  std::string s = trim(line);
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) s = trim(std::string_view(s).substr(1));
  for (auto label : labels) {
    for (bool bracketed : {false, true}) {
      const std::string head = bracketed ? "<" + std::string(label) + ">" : std::string(label);
      if (s.size() < head.size() || to_lower(s.substr(0, head.size())) != to_lower(head)) continue;
      auto rest = std::string_view(s).substr(head.size());
      if (!bracketed && (rest.empty() || rest[0] != ':')) continue;
      if (!rest.empty() && rest[0] == ':') rest.remove_prefix(1);
      return trim(rest);
    }
  }
  return s;
}

// First paragraph with an echoed label removed, lines joined by spaces.
std::string paragraph_value(std::string_view raw, std::initializer_list<std::string_view> labels) {
  std::string out;
  std::size_t pos = 0;
  bool started = false;
  while (pos <= raw.size()) {
    const auto nl = raw.find('\n', pos);
    const auto line = raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;
    std::string value = started ? trim(line) : strip_label(line, labels);
    if (value.empty()) {
      if (started) break;
      continue;
    }
    if (started) out += ' ';
    out += value;
    started = true;
  }
  return out;
}

std::optional<std::string> load_image(const corpus::ImageRecord& rec, const PipelineContext& ctx, Record& r,
                                      const corpus::SceneGraphObject* box, bool& ok) {
  ok = true;
  if (!ctx.attach_image) return std::nullopt;
  try {
    const auto bytes = vision::read_image_file(rec.path);
    if (box != nullptr) {
      return vision::base64_encode(vision::annotate_bbox(bytes, *box, ctx.style));
    }
    return vision::encode_for_transport(bytes);
  } catch (const ImageError& e) {
    mark_invalid(r, Reason::kImageError, "image", e.what());
    ok = false;
    return std::nullopt;
  }
}

}  // namespace

std::string first_line_value(std::string_view raw, std::initializer_list<std::string_view> labels) {
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const auto nl = raw.find('\n', pos);
    const auto line = raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;
    auto value = strip_label(line, labels);
    if (!value.empty()) return value;
  }
  return {};
}

std::optional<corpus::SceneGraphObject> pick_object(const corpus::ImageRecord& record,
                                                    const corpus::AreaThreshold& threshold, std::uint64_t run_seed,
                                                    std::size_t slot) {
  const auto survivors = threshold.apply(record);
  if (survivors.empty()) return std::nullopt;
  std::vector<std::size_t> perm(survivors.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SeededRng rng(mix_seed(run_seed, fnv1a64("objects\x1f" + record.id)));
  rng.shuffle(std::span<std::size_t>(perm));
  return survivors[perm[slot % perm.size()]];
}

Record run_single_step(const corpus::PlanEntry& entry, const PipelineContext& ctx) {
  Record r = start_record(entry, ctx, PipelineKind::kSingleStep);
  const auto& rec = image_of(entry, ctx);
  bool ok = true;
  const auto image = load_image(rec, ctx, r, nullptr, ok);
  if (!ok) return r;
  std::string raw;
  const auto& tmpl = stage_template(ctx, prompt::Stage::kTriplet);
  if (!call(ctx, r, tmpl, {{"prefix", r.triplet.meta.prefix}}, image, ctx.params.max_new_tokens, "triplet", raw)) {
    return r;
  }
  apply_parse(r, ctx, raw);
  return r;
}

Record run_single_step_vip(const corpus::PlanEntry& entry, const PipelineContext& ctx) {
  Record r = start_record(entry, ctx, PipelineKind::kSingleStepVip);
  const auto& rec = image_of(entry, ctx);
  const auto object = pick_object(rec, ctx.threshold, ctx.run_seed, entry.slot);
  if (!object) {
    r.status = SlotStatus::kSkipped;
    r.reason = Reason::kNoEligibleObject;
    r.stage = "object";
    r.detail = "no object survives the area threshold";
    return r;
  }
  r.triplet.meta.object = object;
  bool ok = true;
  const auto image = load_image(rec, ctx, r, &*object, ok);
  if (!ok) return r;
  std::string raw;
  const auto& tmpl = stage_template(ctx, prompt::Stage::kTriplet);
  const prompt::Bindings bindings{{"prefix", r.triplet.meta.prefix}, {"obj name", object->name}};
  if (!call(ctx, r, tmpl, bindings, image, ctx.params.max_new_tokens, "triplet", raw)) return r;
  apply_parse(r, ctx, raw);
  return r;
}

Record run_multi_step(const corpus::PlanEntry& entry, const PipelineContext& ctx) {
  Record r = start_record(entry, ctx, PipelineKind::kMultiStep);
  const auto& rec = image_of(entry, ctx);
  bool ok = true;
  const auto image = load_image(rec, ctx, r, nullptr, ok);
  if (!ok) return r;
  auto& t = r.triplet;

  std::string raw;
  if (!call(ctx, r, stage_template(ctx, prompt::Stage::kQuestion), {{"prefix", t.meta.prefix}}, image,
            ctx.budgets.question, "question", raw)) {
    return r;
  }
  t.question = first_line_value(raw, {"Question"});
  if (t.question.empty()) {
    mark_invalid(r, Reason::kTokenFormatError, "question", "empty question");
    return r;
  }

  if (!call(ctx, r, stage_template(ctx, prompt::Stage::kAnswer), {{"question", t.question}}, image,
            ctx.budgets.answer, "answer", raw)) {
    return r;
  }
  t.answer = first_line_value(raw, {"Short Answer", "Answer"});
  if (t.answer.empty()) {
    mark_invalid(r, Reason::kTokenFormatError, "answer", "empty answer");
    return r;
  }

  struct StageSpec {
    prompt::Stage stage;
    const char* source;
    int budget;
  };
  const StageSpec specs[] = {
      {prompt::Stage::kExplanationBase, "base", ctx.budgets.explanation_base},
      {prompt::Stage::kExplanationCot, "cot", ctx.budgets.explanation_cot},
      {prompt::Stage::kExplanationReact, "react", ctx.budgets.explanation_react},
  };
  const prompt::Bindings bindings{{"question", t.question}, {"short_answer", t.answer}};
  CandidateSet set;
  for (const auto& spec : specs) {
    const std::string stage_name = std::string(prompt::to_string(spec.stage));
    if (!call(ctx, r, stage_template(ctx, spec.stage), bindings, image, spec.budget, stage_name, raw)) return r;
    std::string candidate;
    if (spec.stage == prompt::Stage::kExplanationReact) {
      candidate = trim(extract_section(raw, "Reason").value_or(""));
    } else {
      candidate = paragraph_value(raw, {"Reasoning", "Reason", "Explanation"});
    }
    if (candidate.empty()) {
      t.meta.candidates = set.candidates;
      t.meta.candidate_sources = set.sources;
      mark_invalid(r, Reason::kTokenFormatError, stage_name, "no explanation in reply");
      return r;
    }
    set.candidates.push_back(std::move(candidate));
    set.sources.emplace_back(spec.source);
  }
  t.meta.candidates = set.candidates;
  t.meta.candidate_sources = set.sources;

  GscResult gsc;
  try {
    gsc = gsc_select(set, ctx.similarity, [&](std::string_view text) { return ctx.gateway->embed(text); });
  } catch (const TransportError& e) {
    mark_invalid(r, Reason::kTransportError, "ensemble", e.what());
    return r;
  } catch (const BackendError& e) {
    mark_invalid(r, Reason::kBackendError, "ensemble", e.what());
    return r;
  }
  t.meta.candidate_scores = gsc.scores;
  t.meta.winner = gsc.winner;
  t.explanation = set.candidates[gsc.winner];
  apply_verdict(r, ctx);
  return r;
}

Record run_entry(const corpus::PlanEntry& entry, const PipelineContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  Record r;
  switch (ctx.kind) {
    case PipelineKind::kSingleStep:
      r = run_single_step(entry, ctx);
      break;
    case PipelineKind::kSingleStepVip:
      r = run_single_step_vip(entry, ctx);
      break;
    case PipelineKind::kMultiStep:
      r = run_multi_step(entry, ctx);
      break;
  }
  r.triplet.meta.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<Record> run_plan(const corpus::SamplingPlan& plan, const PipelineContext& ctx, RunPlanOptions options) {
  const auto n = plan.size();
  std::vector<std::optional<Record>> slots(n);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = options.completed.find(plan.entries[i].index);
    if (it != options.completed.end()) {
      slots[i] = it->second;
    } else {
      todo.push_back(i);
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex emit_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    while (!stop.load()) {
      const auto k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const auto i = todo[k];
      try {
        Record r = run_entry(plan.entries[i], ctx);
        std::lock_guard lock(emit_mutex);
        if (options.on_record) options.on_record(r);
        slots[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(emit_mutex);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
    }
  };

  const auto workers = std::max<std::size_t>(1, std::min(options.workers, todo.size()));
  if (!todo.empty()) {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Record> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace vqasynth::pipelines
