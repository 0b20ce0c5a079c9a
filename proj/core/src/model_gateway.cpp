#include "vqasynth/model_gateway.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "vqasynth/errors.hpp"

namespace vqasynth::gateway {

void DecodingParams::validate() const {
  if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) throw std::invalid_argument("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens) {
  if (max_tokens == 0) return {};
  std::size_t tokens = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    ++tokens;
    if (tokens == max_tokens) return std::string(text.substr(0, i));
  }
  return std::string(text);
}

ModelGateway::ModelGateway(std::shared_ptr<GenerationBackend> backend, std::shared_ptr<EmbeddingProvider> embedder,
                           GatewayOptions options)
    : backend_(std::move(backend)),
      embedder_(std::move(embedder)),
      options_(options),
      slots_(static_cast<std::ptrdiff_t>(options.max_in_flight == 0 ? 1 : options.max_in_flight)) {
  if (!backend_) throw std::invalid_argument("gateway needs a generation backend");
  if (options_.retry.max_attempts < 1) throw std::invalid_argument("retry.max_attempts must be >= 1");
}

namespace {

class SlotGuard {
 public:
  SlotGuard(std::counting_semaphore<1 << 16>& sem, std::atomic<std::size_t>& in_flight,
            std::atomic<std::size_t>& peak)
      : sem_(sem), in_flight_(in_flight) {
    sem_.acquire();
    const auto now = in_flight_.fetch_add(1) + 1;
    auto prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
  }
  ~SlotGuard() {
    in_flight_.fetch_sub(1);
    sem_.release();
  }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1 << 16>& sem_;
  std::atomic<std::size_t>& in_flight_;
};

}  // namespace

std::string ModelGateway::generate(const GenerationRequest& request) {
  if (request.prompt.empty()) throw std::invalid_argument("request " + request.tag + ": empty prompt");
  request.params.validate();
  requests_.fetch_add(1);

  auto backoff = options_.retry.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    try {
      SlotGuard guard(slots_, in_flight_, peak_in_flight_);
      return backend_->complete(request);
    } catch (const TransportError& e) {
      last_error = e.what();
    } catch (const BackendError& e) {
      throw BackendError("request " + request.tag + ": " + e.what());
    }
    if (attempt < options_.retry.max_attempts) {
      retries_.fetch_add(1);
      if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * options_.retry.backoff_multiplier));
    }
  }
  throw TransportError("request " + request.tag + " failed after " + std::to_string(options_.retry.max_attempts) +
                       " attempts: " + last_error);
}

EmbeddingVector ModelGateway::embed(std::string_view text) {
  if (!embedder_) throw std::logic_error("gateway has no embedding provider");
  if (text.empty()) throw std::invalid_argument("cannot embed empty text");
  EmbeddingVector v;
  auto backoff = options_.retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      SlotGuard guard(slots_, in_flight_, peak_in_flight_);
      v = embedder_->embed(text);
      break;
    } catch (const TransportError&) {
      if (attempt >= options_.retry.max_attempts) throw;
      retries_.fetch_add(1);
      if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * options_.retry.backoff_multiplier));
    }
  }
  std::lock_guard lock(dim_mutex_);
  if (v.dimension() == 0) throw ConfigError("embedding", "provider returned an empty vector");
  if (!embedding_dim_) {
    embedding_dim_ = v.dimension();
  } else if (*embedding_dim_ != v.dimension()) {
    throw ConfigError("embedding", "dimension changed from " + std::to_string(*embedding_dim_) + " to " +
                                       std::to_string(v.dimension()));
  }
  return v;
}

GatewayStats ModelGateway::stats() const {
  return {requests_.load(), retries_.load(), peak_in_flight_.load()};
}

}  // namespace vqasynth::gateway
