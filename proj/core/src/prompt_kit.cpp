#include "vqasynth/prompt_kit.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>

#include "vqasynth/errors.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::prompt {

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::kTriplet: return "triplet";
    case Stage::kQuestion: return "question";
    case Stage::kAnswer: return "answer";
    case Stage::kExplanationBase: return "explanation-base";
    case Stage::kExplanationCot: return "explanation-cot";
    case Stage::kExplanationReact: return "explanation-react";
  }
  return "unknown";
}

std::optional<Stage> stage_from_string(std::string_view name) noexcept {
  for (auto s : {Stage::kTriplet, Stage::kQuestion, Stage::kAnswer, Stage::kExplanationBase, Stage::kExplanationCot,
                 Stage::kExplanationReact}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

const std::set<std::string>& allowed_placeholders(Stage stage) {
  static const std::set<std::string> triplet{"prefix", "obj name"};
  static const std::set<std::string> question{"prefix"};
  static const std::set<std::string> answer{"question"};
  static const std::set<std::string> explanation{"question", "short_answer"};
  switch (stage) {
    case Stage::kTriplet: return triplet;
    case Stage::kQuestion: return question;
    case Stage::kAnswer: return answer;
    default: return explanation;
  }
}

namespace {

bool placeholder_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == ' ';
}

// Calls fn(literal_begin, literal_end, name) for each placeholder; name is
// empty for the trailing literal run.
template <typename Fn>
void scan(std::string_view body, Fn&& fn) {
  std::size_t literal_start = 0;
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] != '{') {
      ++i;
      continue;
    }
    const auto close = body.find('}', i + 1);
    if (close == std::string_view::npos) break;
    const auto name = body.substr(i + 1, close - i - 1);
    const bool valid = !name.empty() && name.front() != ' ' && name.back() != ' ' &&
                       std::all_of(name.begin(), name.end(), placeholder_char);
    if (!valid) {
      ++i;
      continue;
    }
    fn(literal_start, i, name);
    i = close + 1;
    literal_start = i;
  }
  fn(literal_start, body.size(), std::string_view{});
}

}  // namespace

std::vector<std::string> placeholders_in(std::string_view body) {
  std::vector<std::string> names;
  scan(body, [&](std::size_t, std::size_t, std::string_view name) {
    if (!name.empty() && std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
  });
  return names;
}

PromptTemplate::PromptTemplate(std::string id, std::string body, Stage stage)
    : id_(std::move(id)), body_(std::move(body)), stage_(stage), placeholders_(placeholders_in(body_)) {
  const auto& allowed = allowed_placeholders(stage_);
  for (const auto& name : placeholders_) {
    if (!allowed.contains(name)) {
      throw TemplateError("template '" + id_ + "' uses placeholder {" + name + "} not allowed for stage " +
                          std::string(to_string(stage_)));
    }
  }
}

std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
  for (const auto& name : tmpl.placeholders()) {
    if (bindings.find(name) == bindings.end()) {
      throw TemplateError("template '" + tmpl.id() + "': missing binding for {" + name + "}");
    }
  }
  std::string out;
  const std::string_view body = tmpl.body();
  out.reserve(body.size() + 64);
  scan(body, [&](std::size_t b, std::size_t e, std::string_view name) {
    out.append(body.substr(b, e - b));
    if (!name.empty()) out += bindings.find(name)->second;
  });
  return out;
}

std::optional<Stage> stage_of(std::string_view template_id) noexcept {
  if (template_id == ids::kSingleStep || template_id == ids::kSingleStepVip) return Stage::kTriplet;
  if (template_id == ids::kQuestion) return Stage::kQuestion;
  if (template_id == ids::kAnswer) return Stage::kAnswer;
  if (template_id == ids::kExplanationBase) return Stage::kExplanationBase;
  if (template_id == ids::kExplanationCot) return Stage::kExplanationCot;
  if (template_id == ids::kExplanationReact) return Stage::kExplanationReact;
  return std::nullopt;
}

PromptTemplate load_template(const std::filesystem::path& dir, std::string_view id, Stage stage) {
  const auto path = dir / (std::string(id) + ".txt");
  std::string body;
  try {
    body = read_file(path.string());
  } catch (const Error&) {
    throw TemplateError("template file not found: " + path.string());
  }
  if (!body.empty() && body.back() == '\n') body.pop_back();
  if (!body.empty() && body.back() == '\r') body.pop_back();
  return PromptTemplate(std::string(id), std::move(body), stage);
}

PromptTemplate load_template(const std::filesystem::path& dir, std::string_view id) {
  const auto stage = stage_of(id);
  if (!stage) throw TemplateError("unknown template id '" + std::string(id) + "'; stage must be given explicitly");
  return load_template(dir, id, *stage);
}

const PromptTemplate& TemplateSet::get(std::string_view id) const {
  for (const auto& t : templates) {
    if (t.id() == id) return t;
  }
  throw TemplateError("template set '" + name + "' has no template '" + std::string(id) + "'");
}

const PromptTemplate* TemplateSet::find_stage(Stage stage) const {
  for (const auto& t : templates) {
    if (t.stage() == stage) return &t;
  }
  return nullptr;
}

std::vector<std::string> template_ids_for_set(std::string_view set_name) {
  if (set_name == "singlestep-optim") return {std::string(ids::kSingleStep)};
  if (set_name == "nonvis-optim") return {std::string(ids::kSingleStepVip)};
  if (set_name == "self_consistency") {
    return {std::string(ids::kQuestion), std::string(ids::kAnswer), std::string(ids::kExplanationBase),
            std::string(ids::kExplanationCot), std::string(ids::kExplanationReact)};
  }
  throw TemplateError("unknown template set '" + std::string(set_name) + "'");
}

TemplateSet load_template_set(const std::filesystem::path& dir, std::string_view set_name) {
  TemplateSet set;
  set.name = std::string(set_name);
  for (const auto& id : template_ids_for_set(set_name)) set.templates.push_back(load_template(dir, id));
  return set;
}

std::vector<std::size_t> apportion(const std::vector<int>& proportions, std::size_t total) {
  if (proportions.empty()) throw std::invalid_argument("proportions must not be empty");
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    if (proportions[i] <= 0) {
      throw std::invalid_argument("proportion #" + std::to_string(i) + " must be positive, got " +
                                  std::to_string(proportions[i]));
    }
  }
  // Exact integer arithmetic: share_i = total * p_i / sum, remainder kept as
  // the numerator mod sum so ties compare exactly.
  const auto sum = static_cast<unsigned long long>(std::accumulate(proportions.begin(), proportions.end(), 0LL));
  std::vector<std::size_t> counts(proportions.size());
  std::vector<unsigned long long> remainders(proportions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const auto num = static_cast<unsigned long long>(total) * static_cast<unsigned long long>(proportions[i]);
    counts[i] = static_cast<std::size_t>(num / sum);
    remainders[i] = num % sum;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k]];
  return counts;
}

PrefixSchedule build_prefix_schedule(const std::vector<std::string>& prefixes, const std::vector<int>& proportions,
                                     std::size_t total, std::uint64_t seed) {
  if (prefixes.empty()) throw std::invalid_argument("prefix list must not be empty");
  if (prefixes.size() != proportions.size()) {
    throw std::invalid_argument("prefix list has " + std::to_string(prefixes.size()) + " entries but proportions has " +
                                std::to_string(proportions.size()));
  }
  PrefixSchedule out;
  out.prefixes = prefixes;
  out.proportions = proportions;
  out.counts = apportion(proportions, total);
  out.schedule.reserve(total);
  for (std::size_t i = 0; i < out.counts.size(); ++i) out.schedule.insert(out.schedule.end(), out.counts[i], i);
  SeededRng rng(seed);
  rng.shuffle(std::span<std::size_t>(out.schedule));
  return out;
}

const std::vector<std::string>& default_prefixes() {
  static const std::vector<std::string> p{"what", "is/are (pick one that fits the most)", "which", "how many", "where"};
  return p;
}

const std::vector<int>& default_proportions() {
  static const std::vector<int> p{3, 2, 1, 1, 1};
  return p;
}

const std::vector<std::string>& vip_prefixes() { return default_prefixes(); }

const std::vector<int>& vip_proportions() {
  static const std::vector<int> p{2, 2, 2, 1, 1};
  return p;
}

const std::vector<std::string>& default_vip_blocklist() {
  static const std::vector<std::string> b{"how", "why"};
  return b;
}

void check_prefix_blocklist(const std::vector<std::string>& prefixes, const std::vector<std::string>& blocklist) {
  for (const auto& p : prefixes) {
    const auto norm = to_lower(trim(p));
    for (const auto& blocked : blocklist) {
      if (norm == to_lower(trim(blocked))) {
        throw std::invalid_argument("prefix '" + p + "' is not allowed for visual-prompt runs");
      }
    }
  }
}

}  // namespace vqasynth::prompt
