#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vqasynth/agreement.hpp"

namespace vqasynth::runner {

struct ScoreRecord {
  std::string triplet_id;
  std::string rater;
  std::array<int, 5> scores{};  // kCriteria order
  std::string timestamp;        // ISO-8601 UTC

  bool operator==(const ScoreRecord&) const = default;
};

// {"triplet_id", "rater", "scores": {"accuracy": n, ...}, "timestamp"}.
// Throws std::invalid_argument on a missing criterion or a value outside
// {-1,1,2,3}.
ScoreRecord score_from_json(const std::string& text);
std::string score_to_json(const ScoreRecord& s);

// Append-only log with last-write-wins per (triplet, rater). Overwrites are
// noted in a separate audit log. Thread-safe.
class ScoreStore {
 public:
  // Replays `log_path` if it exists. The audit log sits next to it.
  explicit ScoreStore(std::filesystem::path log_path, std::size_t compact_every = 1000);

  struct SubmitResult {
    bool overwritten = false;
  };
  SubmitResult submit(ScoreRecord record);

  // Resolved state, sorted by (triplet id, rater).
  std::vector<ScoreRecord> resolved() const;
  std::set<std::string> scored_by(const std::string& rater) const;
  std::size_t size() const;

  // Rewrites the log to hold only the resolved state.
  void compact();

  const std::filesystem::path& log_path() const noexcept { return log_path_; }
  std::filesystem::path audit_path() const;

 private:
  void append_line(const std::filesystem::path& path, const std::string& line);
  void compact_locked();

  std::filesystem::path log_path_;
  std::size_t compact_every_;
  std::size_t appends_since_compact_ = 0;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, ScoreRecord> state_;
};

struct CriterionAgreement {
  std::optional<double> ac2;  // nullopt when no item has a full valid row
  std::size_t items_used = 0;
  std::optional<double> mean;  // over all ratings other than -1
};

struct AgreementSummary {
  std::vector<std::string> raters;  // sorted
  std::size_t items = 0;            // triplets scored by every rater
  std::array<CriterionAgreement, 5> criteria;
  CriterionAgreement overall;       // criteria pooled
};

// Agreement over triplets scored by every rater who has submitted anything.
AgreementSummary summarize_agreement(const std::vector<ScoreRecord>& scores);
std::string agreement_to_json(const AgreementSummary& a);

// One row per rater (mean per criterion, then the row mean), then an AVG row
// holding the column means over raters. Ratings of -1 are left out of means.
std::string scores_to_csv(const std::vector<ScoreRecord>& scores);

}  // namespace vqasynth::runner
