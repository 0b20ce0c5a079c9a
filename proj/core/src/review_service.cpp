#include "vqasynth/review_service.hpp"

#include <httplib.h>

#include <json.hpp>
#include <map>
#include <spdlog/spdlog.h>

#include "vqasynth/errors.hpp"
#include "vqasynth/image.hpp"
#include "vqasynth/records.hpp"
#include "vqasynth/score_store.hpp"

namespace vqasynth::runner {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct ReviewService::Impl {
  ReviewOptions options;
  std::vector<Record> records;
  std::map<std::string, std::size_t> by_id;
  ScoreStore store;
  httplib::Server server;

  explicit Impl(ReviewOptions o)
      : options(std::move(o)), records(records::read_dataset(options.dataset)), store(options.scores) {
    for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records::triplet_id(records[i]), i);
    routes();
  }

  ordered_json item_json(const Record& r, const std::set<std::string>* scored) const {
    const auto id = records::triplet_id(r);
    ordered_json j;
    j["id"] = id;
    j["index"] = r.index;
    j["image_id"] = r.image_id;
    j["slot"] = r.slot;
    j["status"] = to_string(r.status);
    j["pipeline"] = to_string(r.triplet.meta.pipeline);
    j["prefix"] = r.triplet.meta.prefix;
    j["question"] = r.triplet.question;
    j["answer"] = r.triplet.answer;
    j["explanation"] = r.triplet.explanation;
    if (const auto& o = r.triplet.meta.object) {
      j["object"] = {{"name", o->name}, {"x", o->x}, {"y", o->y}, {"w", o->w}, {"h", o->h}};
    } else {
      j["object"] = nullptr;
    }
    j["image_url"] = "/api/images/" + id;
    j["annotated"] = r.triplet.meta.object.has_value();
    if (scored != nullptr) j["scored"] = scored->count(id) > 0;
    return j;
  }

  std::optional<fs::path> image_path(const std::string& image_id) const {
    std::error_code ec;
    for (const char* ext : {".jpg", ".jpeg", ".png", ".JPG", ".JPEG", ".PNG"}) {
      auto p = options.images_dir / (image_id + ext);
      if (fs::is_regular_file(p, ec)) return p;
    }
    return std::nullopt;
  }

  static void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, ordered_json{{"error", message}});
  }

  static std::string rater_of(const httplib::Request& req) {
    if (req.has_param("rater")) return req.get_param_value("rater");
    return req.get_header_value("X-Rater-Id");
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, X-Rater-Id"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/triplets", [this](const httplib::Request& req, httplib::Response& res) {
      const auto rater = rater_of(req);
      const bool only_unscored = req.has_param("unscored") && req.get_param_value("unscored") == "1";
      if (only_unscored && rater.empty()) return send_error(res, 400, "unscored=1 needs a rater");
      std::set<std::string> scored;
      if (!rater.empty()) scored = store.scored_by(rater);
      ordered_json items = ordered_json::array();
      std::size_t done = 0;
      for (const auto& r : records) {
        const bool is_scored = scored.count(records::triplet_id(r)) > 0;
        done += is_scored ? 1 : 0;
        if (only_unscored && is_scored) continue;
        items.push_back(item_json(r, rater.empty() ? nullptr : &scored));
      }
      ordered_json body;
      body["rater"] = rater.empty() ? ordered_json(nullptr) : ordered_json(rater);
      body["total"] = records.size();
      body["scored"] = done;
      body["items"] = std::move(items);
      send_json(res, 200, body);
    });

    server.Get(R"(/api/triplets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto it = by_id.find(req.matches[1]);
      if (it == by_id.end()) return send_error(res, 404, "unknown triplet id");
      send_json(res, 200, item_json(records[it->second], nullptr));
    });

    server.Get(R"(/api/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto it = by_id.find(req.matches[1]);
      if (it == by_id.end()) return send_error(res, 404, "unknown triplet id");
      const auto& r = records[it->second];
      const auto path = image_path(r.image_id);
      if (!path) return send_error(res, 404, "no image file for " + r.image_id);
      try {
        const auto bytes = vision::read_image_file(*path);
        if (r.triplet.meta.object) {
          const auto png = vision::annotate_bbox(bytes, *r.triplet.meta.object, options.style);
          res.set_content(std::string(png.begin(), png.end()), "image/png");
        } else {
          const bool png = bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P';
          res.set_content(std::string(bytes.begin(), bytes.end()), png ? "image/png" : "image/jpeg");
        }
      } catch (const ImageError& e) {
        send_error(res, 500, e.what());
      }
    });

    server.Post("/api/scores", [this](const httplib::Request& req, httplib::Response& res) {
      ScoreRecord s;
      try {
        s = score_from_json(req.body);
      } catch (const std::invalid_argument& e) {
        return send_error(res, 400, e.what());
      }
      if (s.rater.empty()) s.rater = req.get_header_value("X-Rater-Id");
      if (s.rater.empty()) return send_error(res, 400, "missing rater");
      if (by_id.count(s.triplet_id) == 0) return send_error(res, 404, "unknown triplet id '" + s.triplet_id + "'");
      try {
        const auto result = store.submit(s);
        send_json(res, 200, ordered_json{{"status", "ok"}, {"overwritten", result.overwritten}});
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
      } catch (const Error& e) {
        send_error(res, 500, e.what());
      }
    });

    server.Get("/api/agreement", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(agreement_to_json(summarize_agreement(store.resolved())), "application/json");
    });

    server.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Content-Disposition", "attachment; filename=\"scores.csv\"");
      res.set_content(scores_to_csv(store.resolved()), "text/csv");
    });
  }
};

ReviewService::ReviewService(ReviewOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ReviewService::~ReviewService() { stop(); }

int ReviewService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ReviewService::serve() { impl_->server.listen_after_bind(); }

void ReviewService::stop() {
  if (impl_) impl_->server.stop();
}

std::size_t ReviewService::triplet_count() const { return impl_->records.size(); }

}  // namespace vqasynth::runner
