#include "vqasynth/quality_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "vqasynth/errors.hpp"
#include "vqasynth/triplet_parser.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::quality {

const std::vector<std::string>& default_banned_phrases() {
  static const std::vector<std::string> phrases{"bounding box", "rectangle",     "red box",
                                                "highlighted",  "marked region", "annotation"};
  return phrases;
}

ValidityRules ValidityRules::for_pipeline(PipelineKind kind) {
  ValidityRules rules;
  if (kind == PipelineKind::kSingleStepVip) rules.banned_phrases = default_banned_phrases();
  return rules;
}

namespace {

constexpr std::array<std::string_view, 12> kTemplateMarkers{
    "{prefix}",     "{obj name}",       "{question}",   "{short_answer}",     "<Question>",        "<Short Answer>",
    "<Reason>",     "<Reasoned Answer>", "Feedback:::", "(your question with", "(your brief answer", "(your rationale"};

}  // namespace

Verdict validate_triplet(const Triplet& t, const ValidityRules& rules) {
  const std::array<std::pair<std::string_view, const std::string*>, 3> fields{
      {{"question", &t.question}, {"answer", &t.answer}, {"explanation", &t.explanation}}};
  for (const auto& [name, value] : fields) {
    if (trim(*value).empty()) return {Reason::kTokenFormatError, std::string(name), "empty " + std::string(name)};
  }
  if (rules.reject_template_markers) {
    for (const auto& [name, value] : fields) {
      for (auto marker : kTemplateMarkers) {
        if (value->find(marker) != std::string::npos) {
          return {Reason::kTokenFormatError, std::string(name), "residual template marker '" + std::string(marker) + "'"};
        }
      }
    }
  }
  if (!pipelines::ends_with_terminal_punctuation(t.question)) {
    return {Reason::kUnfinishedGeneration, "question", "question ends without terminal punctuation"};
  }
  if (!pipelines::ends_with_terminal_punctuation(t.explanation)) {
    return {Reason::kUnfinishedGeneration, "explanation", "explanation ends without terminal punctuation"};
  }
  if (rules.require_question_mark) {
    const auto q = trim(t.question);
    if (q.empty() || q.back() != '?') return {Reason::kQuestionFormat, "question", "question does not end with '?'"};
  }
  for (const auto& [name, value] : fields) {
    for (const auto& phrase : rules.banned_phrases) {
      if (contains_case_insensitive(*value, phrase)) {
        return {Reason::kHiddenContext, std::string(name), "mentions '" + phrase + "'"};
      }
    }
  }
  return {};
}

std::string dedup_key(const Triplet& t) {
  return collapse_whitespace(t.question) + '\x1f' + collapse_whitespace(t.answer) + '\x1f' +
         collapse_whitespace(t.explanation);
}

DedupResult dedup_triplets(std::span<const Triplet> triplets) {
  DedupResult out;
  std::unordered_set<std::string> seen;
  seen.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (seen.insert(dedup_key(t)).second) {
      out.unique.push_back(t);
    } else {
      ++out.duplicates;
    }
  }
  return out;
}

double CorpusStats::valid_pct_of_expected() const {
  return expected == 0 ? 0.0 : 100.0 * static_cast<double>(valid) / static_cast<double>(expected);
}

double CorpusStats::valid_pct_of_resolved() const {
  const auto resolved = valid + invalid;
  return resolved == 0 ? 0.0 : 100.0 * static_cast<double>(valid) / static_cast<double>(resolved);
}

double CorpusStats::unique_pct() const {
  return valid == 0 ? 0.0 : 100.0 * static_cast<double>(unique) / static_cast<double>(valid);
}

ComponentStats component_stats(std::span<const std::string> texts) {
  ComponentStats s;
  std::unordered_set<std::string> vocab;
  std::size_t tokens = 0;
  for (const auto& text : texts) {
    auto toks = clean_tokens(text);
    tokens += toks.size();
    for (auto& tok : toks) vocab.insert(std::move(tok));
  }
  s.vocabulary = vocab.size();
  s.average_length = texts.empty() ? 0.0 : static_cast<double>(tokens) / static_cast<double>(texts.size());
  return s;
}

CorpusStats corpus_stats(std::span<const Triplet> valid, std::size_t expected, std::size_t invalid) {
  if (expected < valid.size()) {
    throw MetricError("expected count " + std::to_string(expected) + " is smaller than valid count " +
                      std::to_string(valid.size()));
  }
  std::vector<std::string> qs, as, es;
  qs.reserve(valid.size());
  as.reserve(valid.size());
  es.reserve(valid.size());
  for (const auto& t : valid) {
    qs.push_back(t.question);
    as.push_back(t.answer);
    es.push_back(t.explanation);
  }
  CorpusStats s;
  s.question = component_stats(qs);
  s.answer = component_stats(as);
  s.explanation = component_stats(es);
  s.valid = valid.size();
  s.invalid = invalid;
  s.expected = expected;
  std::unordered_set<std::string> keys;
  for (const auto& t : valid) keys.insert(dedup_key(t));
  s.unique = keys.size();
  return s;
}

Histogram length_histogram(std::span<const std::string> texts) {
  if (texts.empty()) throw MetricError("length histogram of an empty text set");
  std::map<std::size_t, std::size_t> counts;
  for (const auto& t : texts) ++counts[clean_tokens(t).size()];
  Histogram h;
  const auto n = static_cast<double>(texts.size());
  for (const auto& [len, c] : counts) h[len] = static_cast<double>(c) / n;
  return h;
}

AlignedHistograms align(const Histogram& p, const Histogram& q) {
  std::set<std::size_t> support;
  for (const auto& [k, v] : p) support.insert(k);
  for (const auto& [k, v] : q) support.insert(k);
  AlignedHistograms out;
  for (auto k : support) {
    out.support.push_back(k);
    const auto ip = p.find(k);
    const auto iq = q.find(k);
    out.p.push_back(ip == p.end() ? 0.0 : ip->second);
    out.q.push_back(iq == q.end() ? 0.0 : iq->second);
  }
  return out;
}

namespace {

void check_distribution(std::span<const double> v, const char* name) {
  double sum = 0;
  for (double x : v) {
    if (!(x >= 0.0)) throw MetricError(std::string(name) + " has a negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw MetricError(std::string(name) + " is not normalized (sum " + std::to_string(sum) + ")");
  }
}

}  // namespace

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw MetricError("histograms are not aligned to a common support");
  if (p.empty()) throw MetricError("empty histograms");
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl_p = 0, kl_q = 0;
  bool overlap = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    overlap = overlap || (p[i] > 0 && q[i] > 0);
    const double m = (p[i] + q[i]) / 2.0;
    if (p[i] > 0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0) kl_q += q[i] * std::log2(q[i] / m);
  }
  // Disjoint supports are exactly 1; summing would only add rounding error.
  if (!overlap) return 1.0;
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

double pearson(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw MetricError("pearson needs equal-length vectors");
  if (p.size() < 2) throw MetricError("pearson needs at least two bins");
  const auto n = static_cast<double>(p.size());
  const double mp = std::accumulate(p.begin(), p.end(), 0.0) / n;
  const double mq = std::accumulate(q.begin(), q.end(), 0.0) / n;
  double cov = 0, vp = 0, vq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dp = p[i] - mp;
    const double dq = q[i] - mq;
    cov += dp * dq;
    vp += dp * dp;
    vq += dq * dq;
  }
  if (vp == 0 || vq == 0) throw MetricError("pearson is undefined for a constant vector");
  return std::clamp(cov / std::sqrt(vp * vq), -1.0, 1.0);
}

SimilarityReport similarity_report(std::span<const Triplet> synthetic, std::span<const Triplet> reference) {
  auto component = [&](auto field) {
    std::vector<std::string> a, b;
    for (const auto& t : synthetic) a.push_back(t.*field);
    for (const auto& t : reference) b.push_back(t.*field);
    const auto aligned = align(length_histogram(a), length_histogram(b));
    ComponentSimilarity c;
    c.jsd = jsd(aligned.p, aligned.q);
    try {
      c.pearson = pearson(aligned.p, aligned.q);
    } catch (const MetricError& e) {
      c.note = e.what();
    }
    return c;
  };
  SimilarityReport r;
  r.question = component(&Triplet::question);
  r.answer = component(&Triplet::answer);
  r.explanation = component(&Triplet::explanation);
  r.jsd_avg = (r.question.jsd + r.answer.jsd + r.explanation.jsd) / 3.0;
  double sum = 0;
  int n = 0;
  for (const auto* c : {&r.question, &r.answer, &r.explanation}) {
    if (c->pearson) {
      sum += *c->pearson;
      ++n;
    }
  }
  if (n > 0) r.pearson_avg = sum / n;
  return r;
}

EfficiencyReport efficiency_report(double total_seconds, std::size_t valid, std::optional<double> baseline_tbar) {
  if (valid == 0) throw MetricError("efficiency is undefined with zero valid triplets");
  if (!(total_seconds > 0)) throw MetricError("total time must be positive");
  EfficiencyReport r;
  r.total_seconds = total_seconds;
  r.valid = valid;
  r.seconds_per_valid = total_seconds / static_cast<double>(valid);
  if (baseline_tbar) r.speedup = *baseline_tbar / r.seconds_per_valid;
  return r;
}

std::string format_duration(double seconds) {
  const auto total = static_cast<long long>(std::llround(seconds));
  char buf[64];
  if (total >= 3600) {
    std::snprintf(buf, sizeof buf, "%lldh %lldm %llds", total / 3600, (total / 60) % 60, total % 60);
  } else {
    std::snprintf(buf, sizeof buf, "%lldm %llds", total / 60, total % 60);
  }
  return buf;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

RougeScore from_overlap(std::size_t overlap, std::size_t cand, std::size_t ref) {
  RougeScore r;
  r.precision = static_cast<double>(overlap) / static_cast<double>(cand);
  r.recall = static_cast<double>(overlap) / static_cast<double>(ref);
  r.f1 = overlap == 0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = split_whitespace(to_lower(candidate));
  const auto r = split_whitespace(to_lower(reference));
  if (c.empty() || r.empty()) throw MetricError("ROUGE needs nonempty candidate and reference");
  return from_overlap(lcs_length(c, r), c.size(), r.size());
}

RougeScore rouge_1(std::string_view candidate, std::string_view reference) {
  const auto c = split_whitespace(to_lower(candidate));
  const auto r = split_whitespace(to_lower(reference));
  if (c.empty() || r.empty()) throw MetricError("ROUGE needs nonempty candidate and reference");
  std::unordered_map<std::string, std::size_t> ref_counts;
  for (const auto& t : r) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : c) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return from_overlap(overlap, c.size(), r.size());
}

RougeSummary qa_explanation_rouge(std::span<const Triplet> triplets) {
  RougeSummary s;
  for (const auto& t : triplets) {
    const std::string qa = t.question + " " + t.answer;
    try {
      s.rouge_l_f1 += rouge_l(qa, t.explanation).f1;
      s.rouge_1_f1 += rouge_1(qa, t.explanation).f1;
      ++s.pairs;
    } catch (const MetricError&) {
    }
  }
  if (s.pairs > 0) {
    s.rouge_l_f1 /= static_cast<double>(s.pairs);
    s.rouge_1_f1 /= static_cast<double>(s.pairs);
  }
  return s;
}

}  // namespace vqasynth::quality
