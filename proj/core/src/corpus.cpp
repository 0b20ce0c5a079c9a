#include "vqasynth/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <json.hpp>

#include "vqasynth/errors.hpp"
#include "vqasynth/image.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kImageExtensions{".jpg", ".jpeg", ".png", ".JPG"};

bool has_image_extension(const fs::path& p) {
  const auto ext = to_lower(p.extension().string());
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

std::optional<fs::path> locate_image(const fs::path& dir, const std::string& id) {
  for (auto ext : kImageExtensions) {
    fs::path candidate = dir / (id + std::string(ext));
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

std::optional<int> as_int(const json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) return static_cast<int>(v.get<double>());
  return std::nullopt;
}

std::optional<SceneGraphObject> parse_object(const json& j) {
  if (!j.is_object()) return std::nullopt;
  const auto name = j.find("name");
  if (name == j.end() || !name->is_string()) return std::nullopt;
  SceneGraphObject obj;
  obj.name = name->get<std::string>();
  for (auto [key, field] : {std::pair{"x", &obj.x}, std::pair{"y", &obj.y}, std::pair{"w", &obj.w},
                            std::pair{"h", &obj.h}}) {
    const auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    const auto v = as_int(*it);
    if (!v) return std::nullopt;
    *field = *v;
  }
  return obj;
}

}  // namespace

const ImageRecord* Corpus::find(const std::string& id) const {
  const auto it = std::lower_bound(records.begin(), records.end(), id,
                                   [](const ImageRecord& r, const std::string& key) { return r.id < key; });
  if (it != records.end() && it->id == id) return &*it;
  // Fallback for corpora assembled by hand in non-sorted order.
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::optional<SceneGraphObject> clamp_to_image(SceneGraphObject obj, int width, int height) {
  if (obj.w < 0 || obj.h < 0) return std::nullopt;
  const int x0 = std::clamp(obj.x, 0, width);
  const int y0 = std::clamp(obj.y, 0, height);
  const long long x1 = std::clamp<long long>(static_cast<long long>(obj.x) + obj.w, 0, width);
  const long long y1 = std::clamp<long long>(static_cast<long long>(obj.y) + obj.h, 0, height);
  obj.x = x0;
  obj.y = y0;
  obj.w = static_cast<int>(std::max<long long>(0, x1 - x0));
  obj.h = static_cast<int>(std::max<long long>(0, y1 - y0));
  return obj;
}

Corpus load_corpus(const fs::path& images_dir, const fs::path& scene_graph_path) {
  if (!fs::exists(scene_graph_path)) {
    throw CorpusError("scene-graph document not found: " + scene_graph_path.string());
  }
  json doc;
  try {
    std::ifstream in(scene_graph_path);
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CorpusError("cannot parse scene-graph document " + scene_graph_path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw CorpusError("scene-graph document must be a map keyed by image id");

  Corpus corpus;
  std::map<std::string, ImageRecord> by_id;

  for (const auto& [id, entry] : doc.items()) {
    ImageRecord rec;
    rec.id = id;
    if (entry.is_object() && entry.contains("file") && entry["file"].is_string()) {
      rec.path = images_dir / entry["file"].get<std::string>();
      if (!fs::exists(rec.path)) {
        corpus.errors.push_back({id, "image file not found: " + rec.path.string()});
        continue;
      }
    } else if (auto located = locate_image(images_dir, id)) {
      rec.path = *located;
    } else {
      corpus.errors.push_back({id, "image file not found for id '" + id + "' in " + images_dir.string()});
      continue;
    }

    if (entry.is_object()) {
      if (auto w = entry.find("width"); w != entry.end()) rec.width = as_int(*w).value_or(0);
      if (auto h = entry.find("height"); h != entry.end()) rec.height = as_int(*h).value_or(0);
    }
    if (rec.width <= 0 || rec.height <= 0) {
      try {
        const auto dims = vision::probe_dimensions(vision::read_image_file(rec.path));
        rec.width = dims.width;
        rec.height = dims.height;
      } catch (const ImageError& e) {
        corpus.errors.push_back({id, e.what()});
        continue;
      }
    }
    if (rec.width <= 0 || rec.height <= 0) {
      corpus.errors.push_back({id, "image has non-positive dimensions"});
      continue;
    }

    const json* objects = nullptr;
    if (entry.is_object()) {
      if (auto it = entry.find("objects"); it != entry.end() && !it->is_null()) objects = &*it;
    }
    if (objects) {
      // GQA stores objects as {object_id: {...}}; plain lists are accepted too.
      auto take = [&](const json& raw, const std::string& where) {
        auto obj = parse_object(raw);
        if (!obj) {
          spdlog::warn("image {}: skipping malformed object {}", id, where);
          return;
        }
        auto clamped = clamp_to_image(*obj, rec.width, rec.height);
        if (!clamped) {
          spdlog::warn("image {}: skipping object {} with negative extent", id, where);
          return;
        }
        rec.objects.push_back(std::move(*clamped));
      };
      if (objects->is_array()) {
        for (std::size_t i = 0; i < objects->size(); ++i) take((*objects)[i], "#" + std::to_string(i));
      } else if (objects->is_object()) {
        for (const auto& [oid, raw] : objects->items()) take(raw, oid);
      } else {
        spdlog::warn("image {}: 'objects' is neither a list nor a map; ignored", id);
      }
    }
    by_id.emplace(id, std::move(rec));
  }

  if (fs::is_directory(images_dir)) {
    for (const auto& dirent : fs::directory_iterator(images_dir)) {
      if (!dirent.is_regular_file() || !has_image_extension(dirent.path())) continue;
      const std::string id = dirent.path().stem().string();
      if (by_id.contains(id) || doc.contains(id)) continue;
      ImageRecord rec;
      rec.id = id;
      rec.path = dirent.path();
      try {
        const auto dims = vision::probe_dimensions(vision::read_image_file(rec.path));
        rec.width = dims.width;
        rec.height = dims.height;
      } catch (const ImageError& e) {
        corpus.errors.push_back({id, e.what()});
        continue;
      }
      by_id.emplace(id, std::move(rec));
    }
  }

  corpus.records.reserve(by_id.size());
  for (auto& [id, rec] : by_id) corpus.records.push_back(std::move(rec));
  return corpus;
}

std::vector<SceneGraphObject> filter_objects(const ImageRecord& record, double min_area_fraction) {
  std::vector<SceneGraphObject> kept;
  const double image_area = static_cast<double>(record.width) * static_cast<double>(record.height);
  if (image_area <= 0) return kept;
  for (const auto& obj : record.objects) {
    if (static_cast<double>(obj.area()) / image_area >= min_area_fraction) kept.push_back(obj);
  }
  return kept;
}

std::vector<SceneGraphObject> filter_objects_by_pixels(const ImageRecord& record, long long min_pixels) {
  std::vector<SceneGraphObject> kept;
  for (const auto& obj : record.objects) {
    if (obj.area() >= min_pixels) kept.push_back(obj);
  }
  return kept;
}

std::vector<SceneGraphObject> AreaThreshold::apply(const ImageRecord& record) const {
  if (mode == Mode::kPixels) return filter_objects_by_pixels(record, static_cast<long long>(value));
  return filter_objects(record, value);
}

SamplingPlan build_sampling_plan(const Corpus& corpus, std::size_t image_count, std::size_t triplets_per_image,
                                 std::uint64_t seed, bool require_scene_graph, const AreaThreshold& threshold) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (!require_scene_graph || !threshold.apply(corpus.records[i]).empty()) eligible.push_back(i);
  }
  if (image_count > eligible.size()) {
    throw CorpusError("sampling plan needs " + std::to_string(image_count) + " images but only " +
                      std::to_string(eligible.size()) + " are eligible (shortfall " +
                      std::to_string(image_count - eligible.size()) + ")");
  }
  SeededRng rng(seed);
  // Partial Fisher-Yates: the first image_count positions become the sample.
  for (std::size_t i = 0; i < image_count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(image_count);
  std::sort(eligible.begin(), eligible.end());

  SamplingPlan plan;
  plan.triplets_per_image = triplets_per_image;
  plan.entries.reserve(image_count * triplets_per_image);
  for (auto idx : eligible) {
    for (std::size_t j = 0; j < triplets_per_image; ++j) {
      plan.entries.push_back({plan.entries.size(), corpus.records[idx].id, j});
    }
  }
  return plan;
}

}  // namespace vqasynth::corpus
