#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "vqasynth/vision_annotator.hpp"

namespace vqasynth::runner {

struct ReviewOptions {
  std::filesystem::path dataset;
  std::filesystem::path images_dir;
  std::filesystem::path scores;  // append log; created on first submission
  vision::AnnotationStyle style;
};

// HTTP API over a read-only dataset:
//   GET  /api/triplets?rater=<id>&unscored=1
//   GET  /api/triplets/<id>
//   GET  /api/images/<id>          annotated PNG for visual-prompt records
//   POST /api/scores               ScoreRecord JSON
//   GET  /api/agreement
//   GET  /api/export               CSV
// The rater may also be given in an X-Rater-Id header.
class ReviewService {
 public:
  explicit ReviewService(ReviewOptions options);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  // Binds to `port`, or to a free port when `port` is 0. Returns the port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();

  std::size_t triplet_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vqasynth::runner
