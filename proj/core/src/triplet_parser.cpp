#include "vqasynth/triplet_parser.hpp"

#include <array>
#include <cctype>
#include <vector>

#include "vqasynth/util.hpp"

namespace vqasynth::pipelines {

namespace {

struct LabelHit {
  std::string_view label;
  std::size_t begin = 0;  // start of the label text
  std::size_t end = 0;    // first byte of the value
};

// Longest first so "Reasoned Answer" wins over "Reason".
constexpr std::array<std::string_view, 5> kTripletLabels{"Reasoned Answer", "Short Answer", "Question", "Answer",
                                                         "Reason"};
constexpr std::array<std::string_view, 9> kSectionLabels{"Reasoned Answer", "Short Answer", "Observation",
                                                         "Reasoning",       "Question",     "Thoughts",
                                                         "Action",          "Answer",       "Reason"};

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_blank(char c) { return c == ' ' || c == '\t'; }

bool at_line_start(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0 && (is_blank(text[i - 1]) || text[i - 1] == '-' || text[i - 1] == '*')) --i;
  return i == 0 || text[i - 1] == '\n' || text[i - 1] == '\r';
}

template <std::size_t N>
std::optional<LabelHit> match_at(std::string_view text, std::size_t pos, const std::array<std::string_view, N>& labels) {
  if (pos > 0 && is_word(text[pos - 1])) return std::nullopt;
  const bool bracketed = text[pos] == '<';
  std::size_t i = pos;
  if (bracketed) {
    ++i;
    while (i < text.size() && is_blank(text[i])) ++i;
  }
  for (auto label : labels) {
    if (text.compare(i, label.size(), label) != 0) continue;
    std::size_t j = i + label.size();
    if (j < text.size() && is_word(text[j])) continue;
    if (bracketed) {
      while (j < text.size() && is_blank(text[j])) ++j;
      if (j >= text.size() || text[j] != '>') continue;
      ++j;
      while (j < text.size() && is_blank(text[j])) ++j;
      if (j < text.size() && text[j] == ':') ++j;
      return LabelHit{label, pos, j};
    }
    // "Answer" alone is only a label in bracketed form; plain labels must open a line.
    if (label == "Answer" || !at_line_start(text, pos)) continue;
    while (j < text.size() && is_blank(text[j])) ++j;
    if (j >= text.size() || text[j] != ':') continue;
    return LabelHit{label, pos, j + 1};
  }
  return std::nullopt;
}

template <std::size_t N>
std::vector<LabelHit> find_labels(std::string_view text, const std::array<std::string_view, N>& labels) {
  std::vector<LabelHit> hits;
  std::size_t i = 0;
  while (i < text.size()) {
    if (auto hit = match_at(text, i, labels)) {
      hits.push_back(*hit);
      i = hit->end;
    } else {
      ++i;
    }
  }
  return hits;
}

std::string_view after_preamble(std::string_view raw) {
  constexpr std::string_view kMarker = "Feedback:::";
  const auto at = raw.rfind(kMarker);
  return at == std::string_view::npos ? raw : raw.substr(at + kMarker.size());
}

std::string value_of(std::string_view text, const std::vector<LabelHit>& hits, std::size_t k) {
  const std::size_t end = k + 1 < hits.size() ? hits[k + 1].begin : text.size();
  return trim(text.substr(hits[k].end, end - hits[k].end));
}

std::string strip_bullet(std::string_view line) {
  std::string s = trim(line);
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) return trim(std::string_view(s).substr(1));
  if (s.size() > 2 && std::isdigit(static_cast<unsigned char>(s[0])) && (s[1] == '.' || s[1] == ')')) {
    return trim(std::string_view(s).substr(2));
  }
  return s;
}

ParseResult check_finished(ParsedFields fields) {
  if (!ends_with_terminal_punctuation(fields.question)) {
    return ParseFailure{Reason::kUnfinishedGeneration, "question", "question ends without terminal punctuation"};
  }
  if (!ends_with_terminal_punctuation(fields.explanation)) {
    return ParseFailure{Reason::kUnfinishedGeneration, "explanation",
                        "explanation ends without terminal punctuation"};
  }
  return fields;
}

}  // namespace

bool ends_with_terminal_punctuation(std::string_view text) {
  std::string t = trim(text);
  while (!t.empty()) {
    const char c = t.back();
    if (c == '"' || c == '\'' || c == ')' || c == ']') {
      t.pop_back();
      continue;
    }
    // UTF-8 closing quotes (U+201D, U+2019).
    if (t.size() >= 3 && static_cast<unsigned char>(t[t.size() - 3]) == 0xE2 &&
        static_cast<unsigned char>(t[t.size() - 2]) == 0x80 &&
        (static_cast<unsigned char>(t.back()) == 0x9D || static_cast<unsigned char>(t.back()) == 0x99)) {
      t.resize(t.size() - 3);
      continue;
    }
    break;
  }
  if (t.empty()) return false;
  const char c = t.back();
  if (c == '.' || c == '?' || c == '!') return true;
  // U+2026 horizontal ellipsis.
  return t.size() >= 3 && static_cast<unsigned char>(t[t.size() - 3]) == 0xE2 &&
         static_cast<unsigned char>(t[t.size() - 2]) == 0x80 && static_cast<unsigned char>(t.back()) == 0xA6;
}

ParseResult parse_triplet(std::string_view raw, Dialect dialect) {
  const std::string_view text = after_preamble(raw);
  const auto hits = find_labels(text, kTripletLabels);

  if (hits.empty()) {
    // The visual-prompt template asks for bare bullet values, in field order.
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto nl = text.find('\n', start);
      const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
      if (auto v = strip_bullet(line); !v.empty()) lines.push_back(std::move(v));
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
    if (lines.size() != 3) {
      return ParseFailure{Reason::kTokenFormatError, "question",
                          "no field labels found and output is not three bullet values"};
    }
    return check_finished({lines[0], lines[1], lines[2]});
  }

  auto first = [&](std::string_view label) -> std::optional<std::string> {
    for (std::size_t k = 0; k < hits.size(); ++k) {
      if (hits[k].label == label) return value_of(text, hits, k);
    }
    return std::nullopt;
  };

  ParsedFields fields;
  const auto question = first("Question");
  if (!question || question->empty()) {
    return ParseFailure{Reason::kTokenFormatError, "question", question ? "empty Question value" : "missing Question label"};
  }
  fields.question = *question;

  const auto answer = first("Short Answer");
  if (!answer || answer->empty()) {
    return ParseFailure{Reason::kTokenFormatError, "answer",
                        answer ? "empty Short Answer value" : "missing Short Answer label"};
  }
  fields.answer = *answer;

  std::optional<std::string> explanation;
  switch (dialect) {
    case Dialect::kReason: explanation = first("Reason"); break;
    case Dialect::kReasonedAnswer: explanation = first("Reasoned Answer"); break;
    case Dialect::kEither:
      for (const auto& h : hits) {
        if (h.label == "Reason" || h.label == "Reasoned Answer") {
          explanation = first(h.label);
          break;
        }
      }
      break;
  }
  if (!explanation || explanation->empty()) {
    return ParseFailure{Reason::kTokenFormatError, "explanation",
                        explanation ? "empty explanation value" : "missing explanation label"};
  }
  fields.explanation = *explanation;
  return check_finished(std::move(fields));
}

std::optional<std::string> extract_section(std::string_view raw, std::string_view label) {
  const auto hits = find_labels(raw, kSectionLabels);
  for (std::size_t k = 0; k < hits.size(); ++k) {
    if (hits[k].label == label) return value_of(raw, hits, k);
  }
  return std::nullopt;
}

}  // namespace vqasynth::pipelines
