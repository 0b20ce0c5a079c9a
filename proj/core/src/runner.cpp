#include "vqasynth/runner.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vqasynth/corpus.hpp"
#include "vqasynth/errors.hpp"
#include "vqasynth/pipelines.hpp"
#include "vqasynth/prompt_kit.hpp"
#include "vqasynth/records.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::runner {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::shared_ptr<gateway::GenerationBackend> make_backend(const RunConfig& c) {
  if (c.backend.kind == BackendConfig::Kind::kRemote) {
    gateway::RemoteOptions o;
    o.base_url = c.backend.url;
    o.model = c.model.path.empty() ? c.model.name : c.model.path;
    o.embedding_model = c.backend.embedding_model;
    o.api_token = c.backend.api_token;
    return std::make_shared<gateway::RemoteBackend>(o);
  }
  gateway::MockScript script;
  if (!c.backend.script.empty()) script = gateway::load_mock_script(c.backend.script);
  gateway::MockOptions o;
  o.seed = c.seed;
  if (!c.model.name.empty()) o.handle = c.model.name;
  o.latency = std::chrono::milliseconds(c.backend.latency_ms);
  return std::make_shared<gateway::MockBackend>(std::move(script), o);
}

std::shared_ptr<gateway::EmbeddingProvider> make_embedder(const RunConfig& c) {
  if (c.pipeline != PipelineKind::kMultiStep || c.similarity != pipelines::SimilarityMode::kEmbedding) return nullptr;
  if (c.backend.kind == BackendConfig::Kind::kRemote) {
    gateway::RemoteOptions o;
    o.base_url = c.backend.url;
    o.embedding_model = c.backend.embedding_model;
    o.api_token = c.backend.api_token;
    return std::make_shared<gateway::RemoteEmbedder>(o);
  }
  return std::make_shared<gateway::MockEmbedder>(c.backend.embedding_dim);
}

ordered_json outcome_json(const SlotOutcome& s) {
  return ordered_json{{"index", s.index},   {"image_id", s.image_id},           {"slot", s.slot},
                      {"status", to_string(s.status)}, {"reason", to_string(s.reason)}, {"stage", s.stage},
                      {"duration_ms", s.duration_ms}};
}

RunManifest read_manifest_file(const fs::path& path) { return manifest_from_json(read_file(path.string())); }

}  // namespace

RunOutputs output_paths(const fs::path& output_dir) {
  return {output_dir / "dataset.jsonl", output_dir / "invalid.jsonl", output_dir / "manifest.json",
          output_dir / "records.partial.jsonl"};
}

std::string config_fingerprint(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["pipeline"] = to_string(c.pipeline);
  j["prompt"] = c.prompt;
  j["templates_dir"] = c.templates_dir.string();
  j["images_dir"] = c.dataset.images_dir.string();
  j["scene_graphs"] = c.dataset.scene_graphs.string();
  j["count"] = c.dataset.count;
  j["use_scene_graph"] = c.dataset.use_scene_graph;
  j["threshold"] = {c.dataset.threshold.mode == corpus::AreaThreshold::Mode::kFraction ? "fraction" : "pixels",
                    c.dataset.threshold.value};
  j["model"] = c.model.name;
  j["model_path"] = c.model.path;
  j["num_per_inference"] = c.run_params.num_per_inference;
  j["use_img_ext"] = c.run_params.use_img_ext;
  j["q_prefix"] = c.run_params.q_prefix;
  j["q_prefix_prop"] = c.run_params.q_prefix_prop;
  j["decoding"] = {c.decoding.temperature, c.decoding.top_p, c.decoding.top_k, c.decoding.do_sample,
                   c.decoding.max_new_tokens};
  j["budgets"] = {c.budgets.question, c.budgets.answer, c.budgets.explanation_base, c.budgets.explanation_cot,
                  c.budgets.explanation_react};
  j["similarity"] = to_string(c.similarity);
  j["backend"] = {c.backend.kind == BackendConfig::Kind::kMock ? "mock" : "remote", c.backend.url,
                  c.backend.script.string(), c.backend.embedding_model, c.backend.embedding_dim};
  j["require_question_mark"] = c.require_question_mark;
  j["banned_phrases"] = c.banned_phrases ? ordered_json(*c.banned_phrases) : ordered_json(nullptr);
  j["annotation"] = {c.annotation.color.r, c.annotation.color.g, c.annotation.color.b, c.annotation.thickness};
  return hex64(fnv1a64(j.dump()));
}

std::string manifest_to_json(const RunManifest& m) {
  ordered_json j;
  j["test_name"] = m.test_name;
  j["config_fingerprint"] = m.config_fingerprint;
  j["pipeline"] = m.pipeline;
  j["model"] = m.model;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["complete"] = m.complete;
  j["plan_size"] = m.plan_size;
  j["expected_total"] = m.expected_total;
  j["totals"] = {{"valid", m.valid}, {"invalid", m.invalid}, {"skipped", m.skipped}, {"resumed", m.resumed}};
  j["total_seconds"] = m.total_seconds;
  j["seconds_per_valid"] = m.seconds_per_valid ? ordered_json(*m.seconds_per_valid) : ordered_json(nullptr);
  j["gateway"] = {{"requests", m.gateway.requests},
                  {"retries", m.gateway.retries},
                  {"peak_in_flight", m.gateway.peak_in_flight}};
  auto ledger = ordered_json::array();
  for (const auto& s : m.ledger) ledger.push_back(outcome_json(s));
  j["ledger"] = std::move(ledger);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const auto j = ordered_json::parse(text);
    m.test_name = j.at("test_name").get<std::string>();
    m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    m.pipeline = j.at("pipeline").get<std::string>();
    m.model = j.at("model").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.plan_size = j.at("plan_size").get<std::size_t>();
    m.expected_total = j.at("expected_total").get<std::size_t>();
    const auto& t = j.at("totals");
    m.valid = t.at("valid").get<std::size_t>();
    m.invalid = t.at("invalid").get<std::size_t>();
    m.skipped = t.at("skipped").get<std::size_t>();
    m.resumed = t.at("resumed").get<std::size_t>();
    m.total_seconds = j.at("total_seconds").get<double>();
    if (!j.at("seconds_per_valid").is_null()) m.seconds_per_valid = j.at("seconds_per_valid").get<double>();
    const auto& g = j.at("gateway");
    m.gateway.requests = g.at("requests").get<std::size_t>();
    m.gateway.retries = g.at("retries").get<std::size_t>();
    m.gateway.peak_in_flight = g.at("peak_in_flight").get<std::size_t>();
    for (const auto& s : j.at("ledger")) {
      SlotOutcome o;
      o.index = s.at("index").get<std::size_t>();
      o.image_id = s.at("image_id").get<std::string>();
      o.slot = s.at("slot").get<std::size_t>();
      o.status = status_from_string(s.at("status").get<std::string>()).value_or(SlotStatus::kInvalid);
      o.reason = reason_from_string(s.at("reason").get<std::string>()).value_or(Reason::kNone);
      o.stage = s.at("stage").get<std::string>();
      o.duration_ms = s.at("duration_ms").get<double>();
      m.ledger.push_back(std::move(o));
    }
  } catch (const ordered_json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunResult run(const RunConfig& config, const RunOptions& options) {
  RunResult result;
  result.outputs = output_paths(config.output_dir);
  const auto& out = result.outputs;
  fs::create_directories(config.output_dir);

  const auto corpus = corpus::load_corpus(config.dataset.images_dir, config.dataset.scene_graphs);
  for (const auto& issue : corpus.errors) spdlog::error("corpus: {}: {}", issue.image_id, issue.message);
  const auto plan = corpus::build_sampling_plan(corpus, config.dataset.count, config.run_params.num_per_inference,
                                                config.seed, config.dataset.use_scene_graph,
                                                config.dataset.threshold);
  const auto schedule = prompt::build_prefix_schedule(config.run_params.q_prefix, config.run_params.q_prefix_prop,
                                                      plan.size(), mix_seed(config.seed, fnv1a64("q_prefix")));
  const auto templates = prompt::load_template_set(config.templates_dir, config.prompt);

  auto backend = options.backend ? options.backend : make_backend(config);
  auto embedder = options.embedder ? options.embedder : make_embedder(config);
  gateway::GatewayOptions gopts;
  gopts.max_in_flight = config.parallelism;
  gopts.retry = config.retry;
  gateway::ModelGateway gw(backend, embedder, gopts);

  pipelines::PipelineContext ctx;
  ctx.kind = config.pipeline;
  ctx.gateway = &gw;
  ctx.corpus = &corpus;
  ctx.templates = &templates;
  ctx.schedule = &schedule;
  ctx.params = config.decoding;
  ctx.budgets = config.budgets;
  ctx.run_seed = config.seed;
  ctx.attach_image = config.run_params.use_img_ext;
  ctx.threshold = config.dataset.threshold;
  ctx.style = config.annotation;
  ctx.similarity = config.similarity;
  ctx.rules = quality::ValidityRules::for_pipeline(config.pipeline);
  ctx.rules.require_question_mark = config.require_question_mark;
  if (config.banned_phrases) ctx.rules.banned_phrases = *config.banned_phrases;
  ctx.tag_prefix = config.test_name + "/";

  auto& m = result.manifest;
  m.test_name = config.test_name;
  m.config_fingerprint = config_fingerprint(config);
  m.pipeline = std::string(to_string(config.pipeline));
  m.model = gw.model_handle();
  m.plan_size = plan.size();
  m.expected_total = config.expected_total.value_or(plan.size());

  pipelines::RunPlanOptions popts;
  popts.workers = config.parallelism;
  std::error_code ec;
  if (options.resume && fs::exists(out.journal, ec) && fs::exists(out.manifest, ec)) {
    try {
      const auto previous = read_manifest_file(out.manifest);
      if (previous.config_fingerprint == m.config_fingerprint && !previous.complete) {
        for (auto& r : records::read_journal(out.journal)) {
          const auto idx = r.index;
          if (idx < plan.size() && plan.entries[idx].image_id == r.image_id) popts.completed.emplace(idx, std::move(r));
        }
        m.started_at = previous.started_at;
        spdlog::info("resuming: {} of {} slots already done", popts.completed.size(), plan.size());
      } else {
        spdlog::warn("discarding partial run with a different configuration");
      }
    } catch (const Error& e) {
      spdlog::warn("ignoring unreadable partial run: {}", e.what());
    }
  }
  if (popts.completed.empty()) fs::remove(out.journal, ec);
  m.resumed = popts.completed.size();
  if (m.started_at.empty()) m.started_at = utc_now();
  write_file_atomic(out.manifest.string(), manifest_to_json(m));

  records::JournalWriter journal(out.journal);
  popts.on_record = [&](const Record& r) { journal.append(r); };

  const auto t0 = std::chrono::steady_clock::now();
  result.records = pipelines::run_plan(plan, ctx, std::move(popts));

  std::vector<Record> valid, rejected;
  for (const auto& r : result.records) {
    (r.status == SlotStatus::kValid ? valid : rejected).push_back(r);
    m.ledger.push_back({r.index, r.image_id, r.slot, r.status, r.reason, r.stage, r.triplet.meta.duration_ms});
    switch (r.status) {
      case SlotStatus::kValid:
        ++m.valid;
        break;
      case SlotStatus::kInvalid:
        ++m.invalid;
        break;
      case SlotStatus::kSkipped:
        ++m.skipped;
        break;
    }
  }
  records::write_dataset(out.dataset, valid);
  records::write_dataset(out.invalid, rejected);
  m.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (m.valid > 0) m.seconds_per_valid = m.total_seconds / static_cast<double>(m.valid);
  m.gateway = gw.stats();
  m.complete = true;
  m.finished_at = utc_now();
  write_file_atomic(out.manifest.string(), manifest_to_json(m));
  fs::remove(out.journal, ec);

  spdlog::info("{}: {} valid, {} invalid, {} skipped of {} in {:.2f}s", m.test_name, m.valid, m.invalid, m.skipped,
               m.plan_size, m.total_seconds);
  return result;
}

RunResult run_from_config(const fs::path& config_path, const RunOptions& options) {
  return run(load_run_config(config_path), options);
}

StatsReport compute_stats(const std::vector<Record>& records, std::optional<std::size_t> expected,
                          std::optional<double> total_seconds, std::optional<double> baseline_tbar) {
  std::vector<Triplet> valid;
  std::size_t invalid = 0;
  for (const auto& r : records) {
    if (r.status == SlotStatus::kValid) {
      valid.push_back(r.triplet);
    } else {
      ++invalid;
    }
  }
  StatsReport rep;
  rep.stats = quality::corpus_stats(valid, expected.value_or(records.size()), invalid);
  rep.duplicates = rep.stats.valid - rep.stats.unique;
  rep.rouge = quality::qa_explanation_rouge(valid);
  if (total_seconds && !valid.empty() && *total_seconds > 0) {
    rep.efficiency = quality::efficiency_report(*total_seconds, valid.size(), baseline_tbar);
  }
  return rep;
}

namespace {

ordered_json component_json(const quality::ComponentStats& c) {
  return {{"vocabulary", c.vocabulary}, {"average_length", c.average_length}};
}

ordered_json similarity_component_json(const quality::ComponentSimilarity& c) {
  ordered_json j;
  j["pearson"] = c.pearson ? ordered_json(*c.pearson) : ordered_json(nullptr);
  j["jsd"] = c.jsd;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string stats_to_json(const StatsReport& r) {
  ordered_json j;
  j["valid"] = r.stats.valid;
  j["invalid"] = r.stats.invalid;
  j["expected"] = r.stats.expected;
  j["unique"] = r.stats.unique;
  j["duplicates"] = r.duplicates;
  j["valid_pct_of_expected"] = r.stats.valid_pct_of_expected();
  j["valid_pct_of_resolved"] = r.stats.valid_pct_of_resolved();
  j["unique_pct"] = r.stats.unique_pct();
  j["question"] = component_json(r.stats.question);
  j["answer"] = component_json(r.stats.answer);
  j["explanation"] = component_json(r.stats.explanation);
  j["rouge"] = {{"pairs", r.rouge.pairs}, {"rouge_l_f1", r.rouge.rouge_l_f1}, {"rouge_1_f1", r.rouge.rouge_1_f1}};
  if (r.efficiency) {
    j["efficiency"] = {{"total_seconds", r.efficiency->total_seconds},
                       {"valid", r.efficiency->valid},
                       {"seconds_per_valid", r.efficiency->seconds_per_valid},
                       {"speedup", r.efficiency->speedup ? ordered_json(*r.efficiency->speedup) : ordered_json(nullptr)}};
  }
  return j.dump(2) + "\n";
}

std::string stats_to_table(const StatsReport& r) {
  std::ostringstream o;
  const auto& s = r.stats;
  char line[96];
  std::snprintf(line, sizeof line, "%-10s %8s %8s\n", "", "vocab", "avg len");
  o << line;
  for (const auto& [name, c] : {std::pair{"question", &s.question}, std::pair{"answer", &s.answer},
                                std::pair{"reason", &s.explanation}}) {
    std::snprintf(line, sizeof line, "%-10s %8zu %8.2f\n", name, c->vocabulary, c->average_length);
    o << line;
  }
  o << "\n";
  o << "valid   " << s.valid << " / " << s.expected << " (" << fixed(s.valid_pct_of_expected(), 1) << "%)\n";
  o << "unique  " << s.unique << " (" << fixed(s.unique_pct(), 1) << "% of valid)\n";
  o << "rouge-l " << fixed(r.rouge.rouge_l_f1, 4) << "  rouge-1 " << fixed(r.rouge.rouge_1_f1, 4) << "\n";
  if (r.efficiency) {
    o << "time    " << quality::format_duration(r.efficiency->total_seconds) << "  t/valid "
      << fixed(r.efficiency->seconds_per_valid, 2) << "s";
    if (r.efficiency->speedup) o << " (" << fixed(*r.efficiency->speedup, 1) << "x)";
    o << "\n";
  }
  return o.str();
}

std::string similarity_to_json(const quality::SimilarityReport& r) {
  ordered_json j;
  j["question"] = similarity_component_json(r.question);
  j["answer"] = similarity_component_json(r.answer);
  j["explanation"] = similarity_component_json(r.explanation);
  j["pearson_avg"] = r.pearson_avg ? ordered_json(*r.pearson_avg) : ordered_json(nullptr);
  j["jsd_avg"] = r.jsd_avg;
  return j.dump(2) + "\n";
}

std::string similarity_to_table(const quality::SimilarityReport& r) {
  auto p = [](const std::optional<double>& v) { return v ? fixed(*v, 3) : std::string("  n/a"); };
  std::ostringstream o;
  o << "           pearson    jsd\n";
  o << "question   " << p(r.question.pearson) << "    " << fixed(r.question.jsd, 3) << "\n";
  o << "answer     " << p(r.answer.pearson) << "    " << fixed(r.answer.jsd, 3) << "\n";
  o << "reason     " << p(r.explanation.pearson) << "    " << fixed(r.explanation.jsd, 3) << "\n";
  o << "average    " << p(r.pearson_avg) << "    " << fixed(r.jsd_avg, 3) << "\n";
  return o.str();
}

}  // namespace vqasynth::runner
