#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vqasynth::gateway {

struct DecodingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  int top_k = 50;
  bool do_sample = false;
  int max_new_tokens = 1500;

  // Throws std::invalid_argument on a violated bound.
  void validate() const;
  bool operator==(const DecodingParams&) const = default;
};

struct GenerationRequest {
  std::string prompt;
  std::optional<std::string> image_base64;  // PNG, standard base64
  DecodingParams params;
  std::string tag;          // provenance, echoed in errors
  std::string template_id;  // used by the mock's script lookup
  std::string slot_key;     // "<image id>#<slot>", ditto
  std::uint64_t seed = 0;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dimension() const noexcept { return values.size(); }
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Throws TransportError (retryable) or BackendError.
  virtual std::string complete(const GenerationRequest& request) = 0;
  virtual std::string handle() const = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
};

struct GatewayOptions {
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
};

struct GatewayStats {
  std::size_t requests = 0;
  std::size_t retries = 0;
  std::size_t peak_in_flight = 0;
};

// Shared entry point for pipelines: in-flight cap, bounded retries and
// request tagging on top of a backend.
class ModelGateway {
 public:
  ModelGateway(std::shared_ptr<GenerationBackend> backend, std::shared_ptr<EmbeddingProvider> embedder,
               GatewayOptions options = {});

  std::string generate(const GenerationRequest& request);
  EmbeddingVector embed(std::string_view text);

  std::string model_handle() const { return backend_->handle(); }
  bool has_embedder() const noexcept { return embedder_ != nullptr; }
  GatewayStats stats() const;

 private:
  std::shared_ptr<GenerationBackend> backend_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  GatewayOptions options_;
  std::counting_semaphore<1 << 16> slots_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_in_flight_{0};
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> retries_{0};
  std::mutex dim_mutex_;
  std::optional<std::size_t> embedding_dim_;
};

// First `max_tokens` whitespace-delimited tokens of `text`; spacing inside
// the kept prefix is preserved.
std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens);

// ---------------------------------------------------------------------------
// Mock backend

struct MockReply {
  std::string text;
  int transport_failures = 0;  // fail this many times before answering
  std::optional<std::string> backend_error;
};

// Replies keyed by (template id, slot key). A "*" slot key matches any slot
// for that template.
struct MockScript {
  std::map<std::pair<std::string, std::string>, MockReply> replies;

  void set(std::string template_id, std::string slot_key, MockReply reply);
  const MockReply* find(const std::string& template_id, const std::string& slot_key) const;
};

// JSON: {"<template id>": {"<slot key>": "text" | {"text":..., "transport_failures":n, "backend_error":...}}}
MockScript load_mock_script(const std::filesystem::path& path);
MockScript parse_mock_script(std::string_view json_text);

struct MockOptions {
  std::uint64_t seed = 0;
  std::string handle = "mock-lvlm";
  std::chrono::milliseconds latency{0};
};

// Pure function of (seed, request) apart from scripted transport failures.
class MockBackend : public GenerationBackend {
 public:
  explicit MockBackend(MockScript script = {}, MockOptions options = {});

  std::string complete(const GenerationRequest& request) override;
  std::string handle() const override { return options_.handle; }

  // Unscripted reply for a request; well-formed for the template's stage.
  std::string fallback_text(const GenerationRequest& request) const;

 private:
  MockScript script_;
  MockOptions options_;
  std::mutex failures_mutex_;
  std::map<std::pair<std::string, std::string>, int> failures_seen_;
};

// Bag-of-tokens hashed into `dimension` buckets, L2-normalized. Texts whose
// token buckets are disjoint are exactly orthogonal.
class MockEmbedder : public EmbeddingProvider {
 public:
  explicit MockEmbedder(std::size_t dimension = 256);
  EmbeddingVector embed(std::string_view text) override;
  std::size_t bucket_of(std::string_view token) const noexcept;
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// Remote backend (chat-completion wire shape over HTTP)

struct RemoteOptions {
  std::string base_url;                                 // e.g. http://127.0.0.1:8000
  std::string chat_path = "/v1/chat/completions";
  std::string embeddings_path = "/v1/embeddings";
  std::string model;
  std::string embedding_model;
  std::string api_token;
  std::chrono::seconds timeout{120};
};

// Serialized request body; stable key order.
std::string build_chat_request_body(const GenerationRequest& request, const std::string& model);
// Extracts choices[0].message.content. Throws BackendError on error payloads.
std::string parse_chat_response(std::string_view body);

class RemoteBackend : public GenerationBackend {
 public:
  explicit RemoteBackend(RemoteOptions options);
  std::string complete(const GenerationRequest& request) override;
  std::string handle() const override { return options_.model; }

 private:
  RemoteOptions options_;
};

class RemoteEmbedder : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteOptions options);
  EmbeddingVector embed(std::string_view text) override;

 private:
  RemoteOptions options_;
};

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path_prefix;
};
ParsedUrl parse_url(const std::string& url);

}  // namespace vqasynth::gateway
