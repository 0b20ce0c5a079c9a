#include <httplib.h>

#include <json.hpp>
#include <regex>

#include "vqasynth/errors.hpp"
#include "vqasynth/model_gateway.hpp"

namespace vqasynth::gateway {

using nlohmann::ordered_json;

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("model.path", "not an http(s) URL: " + url);
  ParsedUrl out;
  out.scheme = m[1].str();
  out.host = m[2].str();
  out.port = m[3].matched ? std::stoi(m[3].str()) : (out.scheme == "https" ? 443 : 80);
  out.path_prefix = m[4].matched ? m[4].str() : "";
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

std::string build_chat_request_body(const GenerationRequest& request, const std::string& model) {
  ordered_json content = ordered_json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  if (request.image_base64) {
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + *request.image_base64}}}});
  }
  ordered_json body;
  body["model"] = model;
  body["messages"] = ordered_json::array({{{"role", "user"}, {"content", content}}});
  body["max_tokens"] = request.params.max_new_tokens;
  body["temperature"] = request.params.temperature;
  body["top_p"] = request.params.top_p;
  body["top_k"] = request.params.top_k;
  body["do_sample"] = request.params.do_sample;
  body["n"] = 1;
  body["stream"] = false;
  return body.dump();
}

std::string parse_chat_response(std::string_view body) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(body);
  } catch (const ordered_json::exception& e) {
    throw BackendError(std::string("unparsable response: ") + e.what());
  }
  if (doc.contains("error")) {
    const auto& err = doc["error"];
    throw BackendError(err.is_object() ? err.value("message", err.dump()) : err.dump());
  }
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const ordered_json::exception& e) {
    throw BackendError(std::string("response has no choices[0].message.content: ") + e.what());
  }
}

namespace {

httplib::Result post_json(const RemoteOptions& opts, const std::string& path, const std::string& body) {
  const auto url = parse_url(opts.base_url);
  if (url.scheme != "http") throw ConfigError("model.path", "only http:// endpoints are supported");
  httplib::Client client(url.host, url.port);
  client.set_connection_timeout(opts.timeout);
  client.set_read_timeout(opts.timeout);
  client.set_write_timeout(opts.timeout);
  httplib::Headers headers;
  if (!opts.api_token.empty()) headers.emplace("Authorization", "Bearer " + opts.api_token);
  return client.Post(url.path_prefix + path, headers, body, "application/json");
}

void check_status(const httplib::Result& res, const std::string& what) {
  if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
  if (res->status >= 500 || res->status == 429) {
    throw TransportError(what + ": HTTP " + std::to_string(res->status));
  }
  if (res->status >= 400) {
    std::string detail = res->body;
    try {
      parse_chat_response(res->body);
    } catch (const BackendError& e) {
      detail = e.what();
    }
    throw BackendError(what + ": HTTP " + std::to_string(res->status) + ": " + detail);
  }
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) { parse_url(options_.base_url); }

std::string RemoteBackend::complete(const GenerationRequest& request) {
  const auto res = post_json(options_, options_.chat_path, build_chat_request_body(request, options_.model));
  check_status(res, "chat completion");
  return parse_chat_response(res->body);
}

RemoteEmbedder::RemoteEmbedder(RemoteOptions options) : options_(std::move(options)) { parse_url(options_.base_url); }

EmbeddingVector RemoteEmbedder::embed(std::string_view text) {
  ordered_json body;
  body["model"] = options_.embedding_model.empty() ? options_.model : options_.embedding_model;
  body["input"] = std::string(text);
  const auto res = post_json(options_, options_.embeddings_path, body.dump());
  check_status(res, "embedding");
  try {
    const auto doc = ordered_json::parse(res->body);
    EmbeddingVector v;
    v.values = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
    return v;
  } catch (const ordered_json::exception& e) {
    throw BackendError(std::string("embedding response malformed: ") + e.what());
  }
}

}  // namespace vqasynth::gateway
