#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vqasynth::prompt {

enum class Stage {
  kTriplet,
  kQuestion,
  kAnswer,
  kExplanationBase,
  kExplanationCot,
  kExplanationReact,
};

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> stage_from_string(std::string_view name) noexcept;

// Placeholders a template of the given stage may reference.
const std::set<std::string>& allowed_placeholders(Stage stage);

// Placeholder names appearing as {name} in `body`, in first-occurrence order.
std::vector<std::string> placeholders_in(std::string_view body);

class PromptTemplate {
 public:
  // Throws TemplateError if the body references a placeholder not allowed for `stage`.
  PromptTemplate(std::string id, std::string body, Stage stage);

  const std::string& id() const noexcept { return id_; }
  const std::string& body() const noexcept { return body_; }
  Stage stage() const noexcept { return stage_; }
  const std::vector<std::string>& placeholders() const noexcept { return placeholders_; }

 private:
  std::string id_;
  std::string body_;
  Stage stage_;
  std::vector<std::string> placeholders_;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

// Substitutes every {name}. Throws TemplateError naming the first unbound
// placeholder. Unused bindings are ignored.
std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

// Template ids shipped in the templates directory.
namespace ids {
inline constexpr std::string_view kSingleStep = "singlestep_triplet";
inline constexpr std::string_view kSingleStepVip = "singlestep_vip_triplet";
inline constexpr std::string_view kQuestion = "multistep_question";
inline constexpr std::string_view kAnswer = "multistep_answer";
inline constexpr std::string_view kExplanationBase = "multistep_explanation_base";
inline constexpr std::string_view kExplanationCot = "multistep_explanation_cot";
inline constexpr std::string_view kExplanationReact = "multistep_explanation_react";
}  // namespace ids

// Stage of a shipped template id.
std::optional<Stage> stage_of(std::string_view template_id) noexcept;

// Reads <dir>/<id>.txt. One trailing newline is dropped.
PromptTemplate load_template(const std::filesystem::path& dir, std::string_view id, Stage stage);
PromptTemplate load_template(const std::filesystem::path& dir, std::string_view id);

// The run configuration's `prompt:` key names one of these sets.
struct TemplateSet {
  std::string name;
  std::vector<PromptTemplate> templates;

  const PromptTemplate& get(std::string_view id) const;
  const PromptTemplate* find_stage(Stage stage) const;
};

// Known sets: "singlestep-optim", "nonvis-optim", "self_consistency".
std::vector<std::string> template_ids_for_set(std::string_view set_name);
TemplateSet load_template_set(const std::filesystem::path& dir, std::string_view set_name);

struct PrefixSchedule {
  std::vector<std::string> prefixes;
  std::vector<int> proportions;
  std::vector<std::size_t> counts;    // per prefix
  std::vector<std::size_t> schedule;  // prefix index per slot

  std::size_t size() const noexcept { return schedule.size(); }
  const std::string& prefix_at(std::size_t slot) const { return prefixes.at(schedule.at(slot)); }
};

// Largest-remainder apportionment of `total` over `proportions`, ties broken
// by lower index. Throws std::invalid_argument on mismatched lengths, empty
// lists or nonpositive proportions.
std::vector<std::size_t> apportion(const std::vector<int>& proportions, std::size_t total);

// Builds the apportioned multiset and shuffles it with `seed`.
PrefixSchedule build_prefix_schedule(const std::vector<std::string>& prefixes, const std::vector<int>& proportions,
                                     std::size_t total, std::uint64_t seed);

// Defaults for single-step and multi-step runs.
const std::vector<std::string>& default_prefixes();
const std::vector<int>& default_proportions();

// Fixed pool used by visual-prompt runs.
const std::vector<std::string>& vip_prefixes();
const std::vector<int>& vip_proportions();

// Prefixes refused for visual-prompt runs (exact, case-insensitive match).
const std::vector<std::string>& default_vip_blocklist();

// Throws std::invalid_argument naming the first blocked prefix.
void check_prefix_blocklist(const std::vector<std::string>& prefixes, const std::vector<std::string>& blocklist);

}  // namespace vqasynth::prompt
