#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vqasynth::corpus {

struct SceneGraphObject {
  std::string name;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const noexcept { return static_cast<long long>(w) * h; }
  bool operator==(const SceneGraphObject&) const = default;
};

struct ImageRecord {
  std::string id;
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  std::vector<SceneGraphObject> objects;
};

struct LoadIssue {
  std::string image_id;
  std::string message;
};

struct Corpus {
  std::vector<ImageRecord> records;
  // Record-level problems (e.g. a listed image whose file is missing).
  std::vector<LoadIssue> errors;

  const ImageRecord* find(const std::string& id) const;
};

// Clamps a box into [0,width]x[0,height]. Returns nullopt for negative extents.
std::optional<SceneGraphObject> clamp_to_image(SceneGraphObject obj, int width, int height);

// Reads the scene-graph document and pairs it with files in `images_dir`.
//
// The document is a map from image id to {width, height, objects}. `objects`
// may be a list or a GQA-style map keyed by object id. Images present in the
// directory but absent from the document are loaded with an empty object list
// and dimensions read from the image header. Throws CorpusError when the
// document is missing or unparsable.
Corpus load_corpus(const std::filesystem::path& images_dir,
                   const std::filesystem::path& scene_graph_path);

// Objects with area / image area >= min_area_fraction, original order.
std::vector<SceneGraphObject> filter_objects(const ImageRecord& record, double min_area_fraction);

// Objects with area >= min_pixels, original order.
std::vector<SceneGraphObject> filter_objects_by_pixels(const ImageRecord& record, long long min_pixels);

struct AreaThreshold {
  enum class Mode { kFraction, kPixels };
  Mode mode = Mode::kFraction;
  double value = 0.02;

  std::vector<SceneGraphObject> apply(const ImageRecord& record) const;
};

struct PlanEntry {
  std::size_t index = 0;  // position in the plan
  std::string image_id;
  std::size_t slot = 0;   // j in [0, triplets_per_image)

  bool operator==(const PlanEntry&) const = default;
};

struct SamplingPlan {
  std::vector<PlanEntry> entries;
  std::size_t triplets_per_image = 0;

  std::size_t size() const noexcept { return entries.size(); }
};

// Uniform sampling without replacement over eligible images. Eligible means
// at least one object survives `threshold` when `require_scene_graph` is set.
// Sampled images keep corpus order; each contributes `triplets_per_image`
// consecutive entries. Throws CorpusError on shortfall.
SamplingPlan build_sampling_plan(const Corpus& corpus, std::size_t image_count,
                                 std::size_t triplets_per_image, std::uint64_t seed,
                                 bool require_scene_graph, const AreaThreshold& threshold = {});

}  // namespace vqasynth::corpus
