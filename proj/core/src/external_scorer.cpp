#include "vqasynth/external_scorer.hpp"

#include <httplib.h>

#include <json.hpp>

#include "vqasynth/errors.hpp"
#include "vqasynth/model_gateway.hpp"

namespace vqasynth::quality {

using nlohmann::ordered_json;

ExternalScorer::ExternalScorer(std::string base_url, std::string api_token, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), api_token_(std::move(api_token)), timeout_(timeout) {
  gateway::parse_url(base_url_);
}

std::vector<double> ExternalScorer::score(const std::string& metric, const std::vector<ScoreItem>& items) const {
  if (metric != "bertscore" && metric != "clipscore") throw std::invalid_argument("unknown metric " + metric);
  ordered_json body;
  body["metric"] = metric;
  body["items"] = ordered_json::array();
  for (const auto& it : items) {
    ordered_json j{{"candidate", it.candidate}, {"reference", it.reference}};
    if (it.image_base64) j["image"] = *it.image_base64;
    body["items"].push_back(std::move(j));
  }

  const auto url = gateway::parse_url(base_url_);
  if (url.scheme != "http") throw ConfigError("scorer.url", "only http:// endpoints are supported");
  httplib::Client client(url.host, url.port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!api_token_.empty()) headers.emplace("Authorization", "Bearer " + api_token_);
  const auto res = client.Post(url.path_prefix + "/score", headers, body.dump(), "application/json");
  if (!res) throw TransportError("scorer: " + httplib::to_string(res.error()));
  if (res->status >= 500 || res->status == 429) throw TransportError("scorer: HTTP " + std::to_string(res->status));
  if (res->status >= 400) throw BackendError("scorer: HTTP " + std::to_string(res->status) + ": " + res->body);

  try {
    const auto doc = ordered_json::parse(res->body);
    auto scores = doc.at("scores").get<std::vector<double>>();
    if (scores.size() != items.size()) {
      throw BackendError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(items.size()) + " items");
    }
    return scores;
  } catch (const ordered_json::exception& e) {
    throw BackendError(std::string("scorer response: ") + e.what());
  }
}

}  // namespace vqasynth::quality
