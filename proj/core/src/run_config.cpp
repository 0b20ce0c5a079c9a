#include "vqasynth/run_config.hpp"

#include <cstdlib>
#include <set>

#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "vqasynth/errors.hpp"
#include "vqasynth/prompt_kit.hpp"
#include "vqasynth/util.hpp"

#ifndef VQASYNTH_SOURCE_TEMPLATE_DIR
#define VQASYNTH_SOURCE_TEMPLATE_DIR ""
#endif
#ifndef VQASYNTH_INSTALL_TEMPLATE_DIR
#define VQASYNTH_INSTALL_TEMPLATE_DIR ""
#endif

namespace vqasynth::runner {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kHardcoded = "<!hardcoded>";

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& known,
                std::vector<std::string>& warnings) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (known.count(key) == 0) {
      warnings.push_back(join(path, key));
      spdlog::warn("config: unknown key '{}' ignored", join(path, key));
    }
  }
}

YAML::Node child(const YAML::Node& node, const std::string& key, const std::string& path) {
  const auto c = node[key];
  if (c && !c.IsNull() && !c.IsMap()) throw ConfigError(join(path, key), "expected a mapping");
  return c;
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "cannot read '" + node.Scalar() + "'");
  }
}

bool flag(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected 0/1 or true/false");
  const auto v = to_lower(trim(node.Scalar()));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(path, "expected 0/1 or true/false, got '" + node.Scalar() + "'");
}

std::size_t count(const YAML::Node& node, const std::string& path) {
  const auto v = scalar<long long>(node, path);
  if (v < 0) throw ConfigError(path, "must be >= 0");
  return static_cast<std::size_t>(v);
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

bool is_hardcoded(const YAML::Node& node) { return node && node.IsScalar() && trim(node.Scalar()) == kHardcoded; }

template <typename T>
std::vector<T> list(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(scalar<T>(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

std::optional<PipelineKind> pipeline_for_prompt(std::string_view prompt_set) {
  if (prompt_set == "singlestep-optim") return PipelineKind::kSingleStep;
  if (prompt_set == "nonvis-optim") return PipelineKind::kSingleStepVip;
  if (prompt_set == "self_consistency") return PipelineKind::kMultiStep;
  return std::nullopt;
}

fs::path default_template_dir() {
  if (const char* env = std::getenv("VQASYNTH_TEMPLATE_DIR"); env != nullptr && *env != '\0') return env;
  std::error_code ec;
  for (const char* dir : {VQASYNTH_SOURCE_TEMPLATE_DIR, VQASYNTH_INSTALL_TEMPLATE_DIR}) {
    if (*dir != '\0' && fs::is_directory(dir, ec)) return dir;
  }
  return "templates";
}

RunConfig parse_run_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!root.IsMap()) throw ConfigError("<document>", "top level must be a mapping");

  RunConfig c;
  check_keys(root, "",
             {"test_name", "seed", "dataset", "model", "prompt", "run_params", "pipeline", "templates_dir",
              "output_dir", "decoding", "budgets", "parallelism", "similarity", "backend", "retry", "validity",
              "annotation", "expected_total"},
             c.warnings);

  if (root["test_name"]) c.test_name = scalar<std::string>(root["test_name"], "test_name");
  if (c.test_name.empty()) c.test_name = "run";
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");

  // dataset
  const auto ds = child(root, "dataset", "");
  if (!ds) throw ConfigError("dataset", "missing");
  check_keys(ds, "dataset",
             {"name", "count", "use_scene_graph", "images_dir", "scene_graphs", "min_area_fraction", "min_area_pixels"},
             c.warnings);
  if (ds["name"]) c.dataset.name = scalar<std::string>(ds["name"], "dataset.name");
  if (!ds["count"]) throw ConfigError("dataset.count", "missing");
  c.dataset.count = count(ds["count"], "dataset.count");
  if (ds["use_scene_graph"]) c.dataset.use_scene_graph = flag(ds["use_scene_graph"], "dataset.use_scene_graph");
  c.dataset.images_dir =
      resolve(base_dir, ds["images_dir"] ? scalar<std::string>(ds["images_dir"], "dataset.images_dir") : "images");
  c.dataset.scene_graphs = resolve(
      base_dir, ds["scene_graphs"] ? scalar<std::string>(ds["scene_graphs"], "dataset.scene_graphs")
                                   : "scene_graphs.json");
  if (ds["min_area_fraction"] && ds["min_area_pixels"]) {
    throw ConfigError("dataset.min_area_pixels", "give either min_area_fraction or min_area_pixels");
  }
  if (ds["min_area_fraction"]) {
    const auto v = scalar<double>(ds["min_area_fraction"], "dataset.min_area_fraction");
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("dataset.min_area_fraction", "must lie in [0, 1]");
    c.dataset.threshold = {corpus::AreaThreshold::Mode::kFraction, v};
  }
  if (ds["min_area_pixels"]) {
    const auto v = scalar<double>(ds["min_area_pixels"], "dataset.min_area_pixels");
    if (!(v >= 0.0)) throw ConfigError("dataset.min_area_pixels", "must be >= 0");
    c.dataset.threshold = {corpus::AreaThreshold::Mode::kPixels, v};
  }

  // model
  if (const auto m = child(root, "model", ""); m) {
    check_keys(m, "model", {"name", "path", "family", "params"}, c.warnings);
    if (m["name"]) c.model.name = scalar<std::string>(m["name"], "model.name");
    if (m["path"]) c.model.path = scalar<std::string>(m["path"], "model.path");
    if (m["family"]) c.model.family = scalar<std::string>(m["family"], "model.family");
    if (const auto p = child(m, "params", "model"); p) {
      check_keys(p, "model.params", {"use_8_bit", "device", "low_cpu"}, c.warnings);
      if (p["use_8_bit"]) c.model.params.use_8_bit = flag(p["use_8_bit"], "model.params.use_8_bit");
      if (p["device"]) c.model.params.device = scalar<std::string>(p["device"], "model.params.device");
      if (p["low_cpu"]) c.model.params.low_cpu = flag(p["low_cpu"], "model.params.low_cpu");
    }
  }
  if (c.model.name.empty()) c.model.name = c.model.path;

  // prompt / pipeline
  if (root["prompt"]) c.prompt = scalar<std::string>(root["prompt"], "prompt");
  if (root["pipeline"]) {
    const auto name = scalar<std::string>(root["pipeline"], "pipeline");
    const auto kind = pipeline_from_string(name);
    if (!kind) throw ConfigError("pipeline", "unknown pipeline '" + name + "'");
    c.pipeline = *kind;
    if (!c.prompt.empty() && pipeline_for_prompt(c.prompt) && *pipeline_for_prompt(c.prompt) != *kind) {
      throw ConfigError("pipeline", "'" + name + "' conflicts with prompt set '" + c.prompt + "'");
    }
    if (c.prompt.empty()) {
      c.prompt = c.pipeline == PipelineKind::kSingleStep      ? "singlestep-optim"
                 : c.pipeline == PipelineKind::kSingleStepVip ? "nonvis-optim"
                                                              : "self_consistency";
    }
  } else {
    if (c.prompt.empty()) throw ConfigError("prompt", "missing");
    const auto kind = pipeline_for_prompt(c.prompt);
    if (!kind) throw ConfigError("prompt", "unknown template set '" + c.prompt + "'");
    c.pipeline = *kind;
  }
  if (prompt::template_ids_for_set(c.prompt).empty()) {
    throw ConfigError("prompt", "unknown template set '" + c.prompt + "'");
  }
  const bool vip = c.pipeline == PipelineKind::kSingleStepVip;

  // run_params
  c.vip_blocklist = prompt::default_vip_blocklist();
  const auto rp = child(root, "run_params", "");
  // Copy-constructed: assigning a missing-key node to an existing one throws.
  const YAML::Node qp = rp ? rp["q_prefix"] : YAML::Node();
  const YAML::Node qpp = rp ? rp["q_prefix_prop"] : YAML::Node();
  if (rp) {
    check_keys(rp, "run_params", {"num_per_inference", "use_img_ext", "q_prefix", "q_prefix_prop", "vip_blocklist"},
               c.warnings);
    if (rp["num_per_inference"]) {
      c.run_params.num_per_inference = count(rp["num_per_inference"], "run_params.num_per_inference");
    }
    if (rp["use_img_ext"]) c.run_params.use_img_ext = flag(rp["use_img_ext"], "run_params.use_img_ext");
    if (rp["vip_blocklist"]) c.vip_blocklist = list<std::string>(rp["vip_blocklist"], "run_params.vip_blocklist");
  }
  if (c.run_params.num_per_inference < 1) throw ConfigError("run_params.num_per_inference", "must be >= 1");

  const bool explicit_prefix = qp && !qp.IsNull() && !is_hardcoded(qp);
  const bool explicit_prop = qpp && !qpp.IsNull() && !is_hardcoded(qpp);
  if (explicit_prefix != explicit_prop) {
    throw ConfigError(explicit_prefix ? "run_params.q_prefix_prop" : "run_params.q_prefix",
                      "q_prefix and q_prefix_prop must be given together");
  }
  if (explicit_prefix) {
    c.run_params.q_prefix = list<std::string>(qp, "run_params.q_prefix");
    c.run_params.q_prefix_prop = list<int>(qpp, "run_params.q_prefix_prop");
    if (c.run_params.q_prefix.empty()) throw ConfigError("run_params.q_prefix", "must not be empty");
    if (c.run_params.q_prefix.size() != c.run_params.q_prefix_prop.size()) {
      throw ConfigError("run_params.q_prefix_prop",
                        "has " + std::to_string(c.run_params.q_prefix_prop.size()) + " entries but q_prefix has " +
                            std::to_string(c.run_params.q_prefix.size()));
    }
    for (std::size_t i = 0; i < c.run_params.q_prefix_prop.size(); ++i) {
      if (c.run_params.q_prefix_prop[i] <= 0) {
        throw ConfigError("run_params.q_prefix_prop[" + std::to_string(i) + "]", "must be positive");
      }
    }
    if (vip) {
      try {
        prompt::check_prefix_blocklist(c.run_params.q_prefix, c.vip_blocklist);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("run_params.q_prefix", e.what());
      }
    }
  } else {
    c.run_params.prefix_hardcoded = true;
    c.run_params.q_prefix = vip ? prompt::vip_prefixes() : prompt::default_prefixes();
    c.run_params.q_prefix_prop = vip ? prompt::vip_proportions() : prompt::default_proportions();
  }

  // extensions
  c.templates_dir = root["templates_dir"] ? resolve(base_dir, scalar<std::string>(root["templates_dir"], "templates_dir"))
                                          : default_template_dir();
  c.output_dir = resolve(base_dir, root["output_dir"] ? scalar<std::string>(root["output_dir"], "output_dir")
                                                      : "output/" + c.test_name);

  if (const auto d = child(root, "decoding", ""); d) {
    check_keys(d, "decoding", {"temperature", "top_p", "top_k", "do_sample", "max_new_tokens"}, c.warnings);
    if (d["temperature"]) c.decoding.temperature = scalar<double>(d["temperature"], "decoding.temperature");
    if (d["top_p"]) c.decoding.top_p = scalar<double>(d["top_p"], "decoding.top_p");
    if (d["top_k"]) c.decoding.top_k = scalar<int>(d["top_k"], "decoding.top_k");
    if (d["do_sample"]) c.decoding.do_sample = flag(d["do_sample"], "decoding.do_sample");
    if (d["max_new_tokens"]) c.decoding.max_new_tokens = scalar<int>(d["max_new_tokens"], "decoding.max_new_tokens");
  }
  try {
    c.decoding.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("decoding", e.what());
  }

  if (const auto b = child(root, "budgets", ""); b) {
    check_keys(b, "budgets", {"question", "answer", "explanation_base", "explanation_cot", "explanation_react"},
               c.warnings);
    auto read = [&](const char* key, int& out) {
      if (!b[key]) return;
      out = scalar<int>(b[key], std::string("budgets.") + key);
      if (out < 1) throw ConfigError(std::string("budgets.") + key, "must be >= 1");
    };
    read("question", c.budgets.question);
    read("answer", c.budgets.answer);
    read("explanation_base", c.budgets.explanation_base);
    read("explanation_cot", c.budgets.explanation_cot);
    read("explanation_react", c.budgets.explanation_react);
  }

  if (root["parallelism"]) {
    c.parallelism = count(root["parallelism"], "parallelism");
    if (c.parallelism < 1) throw ConfigError("parallelism", "must be >= 1");
  }

  if (root["similarity"]) {
    const auto s = scalar<std::string>(root["similarity"], "similarity");
    if (s == "embedding") {
      c.similarity = pipelines::SimilarityMode::kEmbedding;
    } else if (s == "unigram") {
      c.similarity = pipelines::SimilarityMode::kUnigram;
    } else {
      throw ConfigError("similarity", "expected 'embedding' or 'unigram'");
    }
  }

  if (const char* token = std::getenv("VQASYNTH_API_TOKEN"); token != nullptr) c.backend.api_token = token;
  if (const auto b = child(root, "backend", ""); b) {
    check_keys(b, "backend", {"kind", "url", "script", "embedding_model", "embedding_dim", "latency_ms"}, c.warnings);
    if (b["kind"]) {
      const auto k = scalar<std::string>(b["kind"], "backend.kind");
      if (k == "mock") {
        c.backend.kind = BackendConfig::Kind::kMock;
      } else if (k == "remote") {
        c.backend.kind = BackendConfig::Kind::kRemote;
      } else {
        throw ConfigError("backend.kind", "expected 'mock' or 'remote'");
      }
    }
    if (b["url"]) c.backend.url = scalar<std::string>(b["url"], "backend.url");
    if (b["script"]) c.backend.script = resolve(base_dir, scalar<std::string>(b["script"], "backend.script"));
    if (b["embedding_model"]) c.backend.embedding_model = scalar<std::string>(b["embedding_model"], "backend.embedding_model");
    if (b["embedding_dim"]) {
      c.backend.embedding_dim = count(b["embedding_dim"], "backend.embedding_dim");
      if (c.backend.embedding_dim == 0) throw ConfigError("backend.embedding_dim", "must be >= 1");
    }
    if (b["latency_ms"]) c.backend.latency_ms = static_cast<int>(count(b["latency_ms"], "backend.latency_ms"));
  }
  if (c.backend.url.empty()) {
    if (const char* url = std::getenv("VQASYNTH_BACKEND_URL"); url != nullptr) c.backend.url = url;
  }
  if (c.backend.kind == BackendConfig::Kind::kRemote && c.backend.url.empty()) {
    throw ConfigError("backend.url", "remote backend needs a URL (or VQASYNTH_BACKEND_URL)");
  }

  if (const auto r = child(root, "retry", ""); r) {
    check_keys(r, "retry", {"max_attempts", "initial_backoff_ms", "backoff_multiplier"}, c.warnings);
    if (r["max_attempts"]) {
      c.retry.max_attempts = scalar<int>(r["max_attempts"], "retry.max_attempts");
      if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts", "must be >= 1");
    }
    if (r["initial_backoff_ms"]) {
      c.retry.initial_backoff =
          std::chrono::milliseconds(count(r["initial_backoff_ms"], "retry.initial_backoff_ms"));
    }
    if (r["backoff_multiplier"]) {
      c.retry.backoff_multiplier = scalar<double>(r["backoff_multiplier"], "retry.backoff_multiplier");
      if (c.retry.backoff_multiplier < 1.0) throw ConfigError("retry.backoff_multiplier", "must be >= 1");
    }
  }

  if (const auto v = child(root, "validity", ""); v) {
    check_keys(v, "validity", {"require_question_mark", "banned_phrases"}, c.warnings);
    if (v["require_question_mark"]) {
      c.require_question_mark = flag(v["require_question_mark"], "validity.require_question_mark");
    }
    if (v["banned_phrases"]) c.banned_phrases = list<std::string>(v["banned_phrases"], "validity.banned_phrases");
  }

  if (const auto a = child(root, "annotation", ""); a) {
    check_keys(a, "annotation", {"color", "thickness"}, c.warnings);
    if (a["color"]) {
      const auto rgb = list<int>(a["color"], "annotation.color");
      if (rgb.size() != 3) throw ConfigError("annotation.color", "expected [r, g, b]");
      for (int ch : rgb) {
        if (ch < 0 || ch > 255) throw ConfigError("annotation.color", "channels must lie in [0, 255]");
      }
      c.annotation.color = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                            static_cast<std::uint8_t>(rgb[2])};
    }
    if (a["thickness"]) {
      c.annotation.thickness = scalar<int>(a["thickness"], "annotation.thickness");
      if (c.annotation.thickness < 1) throw ConfigError("annotation.thickness", "must be >= 1");
    }
  }

  if (root["expected_total"]) c.expected_total = count(root["expected_total"], "expected_total");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const std::exception& e) {
    throw ConfigError("<document>", e.what());
  }
  return parse_run_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace vqasynth::runner
