#include "vqasynth/model_gateway.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "vqasynth/errors.hpp"
#include "vqasynth/prompt_kit.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::gateway {

using nlohmann::json;

void MockScript::set(std::string template_id, std::string slot_key, MockReply reply) {
  replies[{std::move(template_id), std::move(slot_key)}] = std::move(reply);
}

const MockReply* MockScript::find(const std::string& template_id, const std::string& slot_key) const {
  if (auto it = replies.find({template_id, slot_key}); it != replies.end()) return &it->second;
  if (auto it = replies.find({template_id, "*"}); it != replies.end()) return &it->second;
  return nullptr;
}

MockScript parse_mock_script(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("backend.script", std::string("cannot parse mock script: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("backend.script", "mock script must be an object keyed by template id");
  MockScript script;
  for (const auto& [template_id, slots] : doc.items()) {
    if (!slots.is_object()) throw ConfigError("backend.script." + template_id, "expected an object of slot replies");
    for (const auto& [slot, reply] : slots.items()) {
      MockReply r;
      if (reply.is_string()) {
        r.text = reply.get<std::string>();
      } else if (reply.is_object()) {
        r.text = reply.value("text", std::string{});
        r.transport_failures = reply.value("transport_failures", 0);
        if (reply.contains("backend_error")) r.backend_error = reply["backend_error"].get<std::string>();
      } else {
        throw ConfigError("backend.script." + template_id + "." + slot, "reply must be a string or an object");
      }
      script.set(template_id, slot, std::move(r));
    }
  }
  return script;
}

MockScript load_mock_script(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const Error&) {
    throw ConfigError("backend.script", "mock script not found: " + path.string());
  }
  return parse_mock_script(text);
}

MockBackend::MockBackend(MockScript script, MockOptions options)
    : script_(std::move(script)), options_(std::move(options)) {}

std::string MockBackend::complete(const GenerationRequest& request) {
  if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
  const MockReply* reply = script_.find(request.template_id, request.slot_key);
  if (reply) {
    if (reply->transport_failures > 0) {
      std::lock_guard lock(failures_mutex_);
      int& seen = failures_seen_[{request.template_id, request.slot_key}];
      if (seen < reply->transport_failures) {
        ++seen;
        throw TransportError("mock transport failure " + std::to_string(seen) + "/" +
                             std::to_string(reply->transport_failures));
      }
    }
    if (reply->backend_error) throw BackendError(*reply->backend_error);
    return truncate_to_tokens(reply->text, static_cast<std::size_t>(request.params.max_new_tokens));
  }
  return truncate_to_tokens(fallback_text(request), static_cast<std::size_t>(request.params.max_new_tokens));
}

namespace {

constexpr std::array<std::string_view, 16> kNouns{"dog",    "bicycle", "table", "window", "tree",  "car",
                                                  "woman",  "bench",   "cup",   "sign",   "horse", "umbrella",
                                                  "street", "plate",   "train", "fence"};
constexpr std::array<std::string_view, 12> kAdjectives{"red",   "wooden", "small",  "large", "white", "striped",
                                                       "green", "metal",  "parked", "old",   "blue",  "bright"};
constexpr std::array<std::string_view, 10> kVerbs{"resting",  "standing", "leaning", "waiting", "shining",
                                                  "covering", "facing",   "holding", "blocking", "supporting"};

class Words {
 public:
  explicit Words(std::uint64_t seed) : rng_(seed) {}
  std::string_view noun() { return kNouns[rng_.uniform_index(kNouns.size())]; }
  std::string_view adj() { return kAdjectives[rng_.uniform_index(kAdjectives.size())]; }
  std::string_view verb() { return kVerbs[rng_.uniform_index(kVerbs.size())]; }

 private:
  SeededRng rng_;
};

// Leading interrogative for a scheduled prefix, e.g. "is/are (pick ...)" -> "Is".
std::string lead_word(std::string_view prompt, std::string_view marker, char terminator) {
  const auto at = prompt.find(marker);
  std::string prefix = "what";
  if (at != std::string_view::npos) {
    const auto start = at + marker.size();
    const auto end = prompt.find(terminator, start);
    prefix = trim(prompt.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
  }
  const auto cut = prefix.find_first_of("/(");
  prefix = trim(prefix.substr(0, cut));
  if (prefix.empty()) prefix = "what";
  prefix[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(prefix[0])));
  return prefix;
}

std::string make_question(Words& w, const std::string& lead) {
  std::ostringstream q;
  q << lead << " " << w.adj() << " " << w.noun() << " is " << w.verb() << " near the " << w.noun() << "?";
  return q.str();
}

std::string make_sentence(Words& w, int clauses) {
  std::ostringstream s;
  s << "The " << w.adj() << " " << w.noun() << " is " << w.verb() << " beside the " << w.noun();
  for (int i = 1; i < clauses; ++i) s << " and the " << w.adj() << " " << w.noun() << " is " << w.verb();
  s << ".";
  return s.str();
}

}  // namespace

std::string MockBackend::fallback_text(const GenerationRequest& request) const {
  const auto seed = mix_seed(mix_seed(options_.seed, request.seed),
                             fnv1a64(request.template_id + '\x1f' + request.slot_key + '\x1f' + request.prompt));
  Words w(seed);
  const auto stage = prompt::stage_of(request.template_id).value_or(prompt::Stage::kTriplet);
  switch (stage) {
    case prompt::Stage::kTriplet: {
      const auto lead = lead_word(request.prompt, "Question Prefix:", '\n');
      std::ostringstream out;
      out << "Feedback:::\nQuestion: " << make_question(w, lead) << "\nShort Answer: The " << w.adj() << " "
          << w.noun() << ".\nReason: " << make_sentence(w, 2) << "\n";
      return out.str();
    }
    case prompt::Stage::kQuestion:
      return make_question(w, lead_word(request.prompt, "prefix '", '\''));
    case prompt::Stage::kAnswer: {
      std::ostringstream out;
      out << "The " << w.adj() << " " << w.noun() << ".";
      return out.str();
    }
    case prompt::Stage::kExplanationBase:
      return make_sentence(w, 1);
    case prompt::Stage::kExplanationCot:
      return make_sentence(w, 3);
    case prompt::Stage::kExplanationReact: {
      std::ostringstream out;
      out << "Observation: " << make_sentence(w, 1) << "\nThoughts: " << make_sentence(w, 1)
          << "\nAction: " << make_sentence(w, 1) << "\nReason: " << make_sentence(w, 2) << "\n";
      return out.str();
    }
  }
  return make_sentence(w, 1);
}

MockEmbedder::MockEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::size_t MockEmbedder::bucket_of(std::string_view token) const noexcept {
  return static_cast<std::size_t>(fnv1a64(token) % dimension_);
}

EmbeddingVector MockEmbedder::embed(std::string_view text) {
  EmbeddingVector v;
  v.values.assign(dimension_, 0.0);
  for (const auto& tok : clean_tokens(text)) v.values[bucket_of(tok)] += 1.0;
  double norm = 0;
  for (double x : v.values) norm += x * x;
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (double& x : v.values) x /= norm;
  }
  return v;
}

}  // namespace vqasynth::gateway
