#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace vqasynth::quality {

// BERTScore and CLIPScore are computed by an outside service; this client
// only posts pairs and reads back one score per pair.
//
// POST {base_url}/score
//   {"metric": "bertscore" | "clipscore",
//    "items": [{"candidate": "...", "reference": "...", "image": "<base64 png>"?}]}
// -> {"scores": [0.91, ...]}
struct ScoreItem {
  std::string candidate;
  std::string reference;
  std::optional<std::string> image_base64;
};

class ExternalScorer {
 public:
  explicit ExternalScorer(std::string base_url, std::string api_token = {},
                          std::chrono::seconds timeout = std::chrono::seconds(60));

  // Throws TransportError or BackendError; the result has one entry per item.
  std::vector<double> score(const std::string& metric, const std::vector<ScoreItem>& items) const;

 private:
  std::string base_url_;
  std::string api_token_;
  std::chrono::seconds timeout_;
};

}  // namespace vqasynth::quality
