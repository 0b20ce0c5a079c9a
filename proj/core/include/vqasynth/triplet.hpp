#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqasynth/corpus.hpp"

namespace vqasynth {

enum class PipelineKind { kSingleStep, kSingleStepVip, kMultiStep };

std::string_view to_string(PipelineKind kind) noexcept;
std::optional<PipelineKind> pipeline_from_string(std::string_view name) noexcept;

// Why a slot did not yield a valid triplet.
enum class Reason {
  kNone,
  kTokenFormatError,
  kUnfinishedGeneration,
  kHiddenContext,
  kQuestionFormat,
  kTransportError,
  kBackendError,
  kImageError,
  kNoEligibleObject,
};

std::string_view to_string(Reason reason) noexcept;
std::optional<Reason> reason_from_string(std::string_view name) noexcept;

struct TripletMeta {
  std::string image_id;
  PipelineKind pipeline = PipelineKind::kSingleStep;
  std::string prefix;
  std::optional<corpus::SceneGraphObject> object;  // visual-prompt runs only
  std::string model;
  std::uint64_t seed = 0;
  std::vector<std::string> raw;  // completion text(s), in call order
  // Multi-step ensembling.
  std::vector<std::string> candidates;
  std::vector<std::string> candidate_sources;
  std::vector<double> candidate_scores;
  std::optional<std::size_t> winner;
  // Wall-clock time for the slot. Kept out of the dataset file so that
  // mock-backed runs stay byte-reproducible; recorded in the run manifest.
  double duration_ms = 0.0;

  bool operator==(const TripletMeta& o) const;
};

struct Triplet {
  std::string question;
  std::string answer;
  std::string explanation;
  TripletMeta meta;

  bool operator==(const Triplet&) const = default;
};

enum class SlotStatus { kValid, kInvalid, kSkipped };

std::string_view to_string(SlotStatus status) noexcept;
std::optional<SlotStatus> status_from_string(std::string_view name) noexcept;

// One plan slot's outcome. Invalid records keep whatever fields were parsed.
struct Record {
  std::size_t index = 0;
  std::string image_id;
  std::size_t slot = 0;
  SlotStatus status = SlotStatus::kValid;
  Reason reason = Reason::kNone;
  std::string stage;   // failing stage or field, empty when valid
  std::string detail;  // human-readable cause
  Triplet triplet;

  bool operator==(const Record&) const = default;
};

}  // namespace vqasynth
