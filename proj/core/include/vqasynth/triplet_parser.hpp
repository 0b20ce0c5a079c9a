#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vqasynth/triplet.hpp"

namespace vqasynth::pipelines {

// Label used for the explanation field. Prompts ask for "Reason:", outputs
// sometimes say "Reasoned Answer:".
enum class Dialect { kReason, kReasonedAnswer, kEither };

struct ParsedFields {
  std::string question;
  std::string answer;
  std::string explanation;
};

struct ParseFailure {
  Reason reason = Reason::kTokenFormatError;
  std::string field;
  std::string detail;
};

using ParseResult = std::variant<ParsedFields, ParseFailure>;

// Extracts the three labeled fields. Labels may be written "Question:" or
// "<Question>:"; anything up to the last "Feedback:::" is ignored.
// A missing or empty field is a TokenFormatError; a question or explanation
// without terminal punctuation is an UnfinishedGeneration.
ParseResult parse_triplet(std::string_view raw, Dialect dialect = Dialect::kEither);

// Body of the first `label:` section (e.g. "Reason" in a ReAct reply), up to
// the next known section label. nullopt when the label is absent.
std::optional<std::string> extract_section(std::string_view raw, std::string_view label);

// Ends in . ? ! or an ellipsis, optionally followed by closing quotes/brackets.
bool ends_with_terminal_punctuation(std::string_view text);

}  // namespace vqasynth::pipelines
