#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqasynth/triplet.hpp"

namespace vqasynth::quality {

// ---------------------------------------------------------------------------
// Validity

struct ValidityRules {
  bool require_question_mark = true;
  // Case-insensitive substrings that invalidate a triplet (HiddenContext).
  std::vector<std::string> banned_phrases;
  bool reject_template_markers = true;

  static ValidityRules for_pipeline(PipelineKind kind);
};

const std::vector<std::string>& default_banned_phrases();

struct Verdict {
  Reason reason = Reason::kNone;
  std::string field;
  std::string detail;

  bool valid() const noexcept { return reason == Reason::kNone; }
};

// First failing rule, checked in order: empty field, residual template
// marker, unfinished field, question mark, banned phrase.
Verdict validate_triplet(const Triplet& t, const ValidityRules& rules);

// ---------------------------------------------------------------------------
// Dedup and corpus statistics

// Trimmed, whitespace-collapsed q/a/e joined with a unit separator.
std::string dedup_key(const Triplet& t);

struct DedupResult {
  std::vector<Triplet> unique;
  std::size_t duplicates = 0;
};

// Exact match on all three fields; first occurrence kept, order stable.
DedupResult dedup_triplets(std::span<const Triplet> triplets);

struct ComponentStats {
  std::size_t vocabulary = 0;
  double average_length = 0.0;  // tokens per field; 0 for an empty corpus
};

struct CorpusStats {
  ComponentStats question;
  ComponentStats answer;
  ComponentStats explanation;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::size_t unique = 0;
  std::size_t expected = 0;

  double valid_pct_of_expected() const;  // valid / expected * 100
  double valid_pct_of_resolved() const;  // valid / (valid + invalid) * 100
  double unique_pct() const;             // unique / valid * 100
};

// Statistics over the valid triplets. Throws MetricError if expected < valid.
CorpusStats corpus_stats(std::span<const Triplet> valid, std::size_t expected, std::size_t invalid = 0);

// Per-field statistic on cleaned tokens.
ComponentStats component_stats(std::span<const std::string> texts);

// ---------------------------------------------------------------------------
// Length distributions

// Token-length -> probability.
using Histogram = std::map<std::size_t, double>;

// Throws MetricError on empty input.
Histogram length_histogram(std::span<const std::string> texts);

struct AlignedHistograms {
  std::vector<std::size_t> support;
  std::vector<double> p;
  std::vector<double> q;
};

// Zero-padded to the union of both supports, ascending.
AlignedHistograms align(const Histogram& p, const Histogram& q);

// Base-2 Jensen-Shannon divergence. Throws MetricError unless p and q have
// equal length, are nonnegative and each sum to 1 within 1e-9.
double jsd(std::span<const double> p, std::span<const double> q);

// Pearson correlation of two frequency vectors. Throws MetricError for fewer
// than two bins or a constant vector.
double pearson(std::span<const double> p, std::span<const double> q);

struct ComponentSimilarity {
  std::optional<double> pearson;  // nullopt when undefined
  double jsd = 0.0;
  std::string note;
};

struct SimilarityReport {
  ComponentSimilarity question;
  ComponentSimilarity answer;
  ComponentSimilarity explanation;
  std::optional<double> pearson_avg;
  double jsd_avg = 0.0;
};

SimilarityReport similarity_report(std::span<const Triplet> synthetic, std::span<const Triplet> reference);

// ---------------------------------------------------------------------------
// Efficiency

struct EfficiencyReport {
  double total_seconds = 0.0;
  std::size_t valid = 0;
  double seconds_per_valid = 0.0;
  std::optional<double> speedup;  // baseline / seconds_per_valid
};

// Throws MetricError when valid == 0 or t <= 0.
EfficiencyReport efficiency_report(double total_seconds, std::size_t valid, std::optional<double> baseline_tbar = {});

// "16m 41s"
std::string format_duration(double seconds);

// ---------------------------------------------------------------------------
// ROUGE

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// LCS over lowercased whitespace tokens. Throws MetricError on an empty side.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);
// Clipped unigram overlap.
RougeScore rouge_1(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeSummary {
  double rouge_l_f1 = 0.0;
  double rouge_1_f1 = 0.0;
  std::size_t pairs = 0;
};

// Mean over triplets of ROUGE("q a", e).
RougeSummary qa_explanation_rouge(std::span<const Triplet> triplets);

}  // namespace vqasynth::quality
