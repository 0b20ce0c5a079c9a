#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "vqasynth/errors.hpp"
#include "vqasynth/model_gateway.hpp"

namespace vqasynth::gateway {
namespace {

GenerationRequest request(std::string template_id, std::string slot_key, int max_tokens = 1500) {
  GenerationRequest r;
  r.prompt = "Describe the image.";
  r.template_id = std::move(template_id);
  r.slot_key = std::move(slot_key);
  r.tag = "test/" + r.slot_key;
  r.params.max_new_tokens = max_tokens;
  return r;
}

GatewayOptions fast(std::size_t in_flight = 4, int attempts = 3) {
  GatewayOptions o;
  o.max_in_flight = in_flight;
  o.retry.max_attempts = attempts;
  o.retry.initial_backoff = std::chrono::milliseconds(0);
  return o;
}

// Sleeps inside complete() and records concurrency.
class SlowBackend : public GenerationBackend {
 public:
  std::string complete(const GenerationRequest&) override {
    const auto now = ++active_;
    auto prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active_;
    return "ok";
  }
  std::string handle() const override { return "slow"; }
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

class FixedEmbedder : public EmbeddingProvider {
 public:
  EmbeddingVector embed(std::string_view text) override {
    return EmbeddingVector{std::vector<double>(text.size() % 2 == 0 ? 4 : 3, 1.0)};
  }
};

TEST(DecodingParams, DefaultsAndBounds) {
  DecodingParams p;
  EXPECT_EQ(p.temperature, 1.0);
  EXPECT_EQ(p.top_p, 1.0);
  EXPECT_EQ(p.top_k, 50);
  EXPECT_FALSE(p.do_sample);
  EXPECT_NO_THROW(p.validate());
  p.max_new_tokens = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.temperature = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.top_p = 1.01;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Truncate, WhitespaceTokens) {
  EXPECT_EQ(truncate_to_tokens("a b c d", 3), "a b c");
  EXPECT_EQ(truncate_to_tokens("a  b\nc d", 3), "a  b\nc");
  EXPECT_EQ(truncate_to_tokens("a b", 5), "a b");
  EXPECT_EQ(truncate_to_tokens("a b", 0), "");
}

TEST(MockBackend, ScriptedReplyIsTruncated) {
  MockScript script;
  script.set("t", "img#0", {"a b c d"});
  auto backend = std::make_shared<MockBackend>(script);
  ModelGateway gw(backend, nullptr, fast());
  EXPECT_EQ(gw.generate(request("t", "img#0", 3)), "a b c");
  EXPECT_EQ(gw.generate(request("t", "img#0")), "a b c d");
}

TEST(MockBackend, WildcardSlot) {
  MockScript script;
  script.set("t", "*", {"any"});
  script.set("t", "img#1", {"specific"});
  MockBackend backend(script);
  EXPECT_EQ(backend.complete(request("t", "img#0")), "any");
  EXPECT_EQ(backend.complete(request("t", "img#1")), "specific");
}

TEST(MockBackend, PureFunctionOfSeedAndRequest) {
  MockBackend a({}, {.seed = 7});
  MockBackend b({}, {.seed = 7});
  MockBackend c({}, {.seed = 8});
  for (const char* id : {"singlestep_triplet", "multistep_question", "multistep_answer",
                         "multistep_explanation_base", "multistep_explanation_cot", "multistep_explanation_react"}) {
    const auto r = request(id, "img000#1");
    EXPECT_EQ(a.complete(r), a.complete(r)) << id;
    EXPECT_EQ(a.complete(r), b.complete(r)) << id;
    EXPECT_NE(a.complete(r), c.complete(r)) << id;
  }
}

TEST(MockBackend, FallbackShapes) {
  MockBackend backend({}, {.seed = 1});
  auto r = request("singlestep_triplet", "x#0");
  r.prompt = "...\nQuestion Prefix: which\n...";
  const auto triplet = backend.complete(r);
  EXPECT_NE(triplet.find("Question: Which "), std::string::npos);
  EXPECT_NE(triplet.find("Short Answer: "), std::string::npos);
  EXPECT_NE(triplet.find("Reason: "), std::string::npos);
  auto q = request("multistep_question", "x#0");
  q.prompt = "begins with the prefix 'how many' and";
  const auto question = backend.complete(q);
  EXPECT_EQ(question.rfind("How many ", 0), 0u);
  EXPECT_EQ(question.back(), '?');
  EXPECT_NE(backend.complete(request("multistep_explanation_react", "x#0")).find("\nReason: "), std::string::npos);
}

TEST(Gateway, RetriesTransportFailures) {
  MockScript script;
  script.set("t", "a#0", {"done", 2});
  auto backend = std::make_shared<MockBackend>(script);
  ModelGateway gw(backend, nullptr, fast());
  EXPECT_EQ(gw.generate(request("t", "a#0")), "done");
  EXPECT_EQ(gw.stats().retries, 2u);
  EXPECT_EQ(gw.stats().requests, 1u);
}

TEST(Gateway, GivesUpAfterBoundedAttempts) {
  MockScript script;
  script.set("t", "a#0", {"never", 5});
  ModelGateway gw(std::make_shared<MockBackend>(script), nullptr, fast(4, 3));
  EXPECT_THROW(gw.generate(request("t", "a#0")), TransportError);
  EXPECT_EQ(gw.stats().retries, 2u);
}

TEST(Gateway, BackendErrorCarriesTagAndIsNotRetried) {
  MockScript script;
  MockReply reply;
  reply.backend_error = "model overloaded";
  script.set("t", "a#0", reply);
  ModelGateway gw(std::make_shared<MockBackend>(script), nullptr, fast());
  try {
    gw.generate(request("t", "a#0"));
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("test/a#0"), std::string::npos);
    EXPECT_NE(msg.find("model overloaded"), std::string::npos);
  }
  EXPECT_EQ(gw.stats().retries, 0u);
}

TEST(Gateway, RejectsEmptyPromptAndBadParams) {
  ModelGateway gw(std::make_shared<MockBackend>(), nullptr, fast());
  auto r = request("t", "a#0");
  r.prompt.clear();
  EXPECT_THROW(gw.generate(r), std::invalid_argument);
  r = request("t", "a#0", 0);
  EXPECT_THROW(gw.generate(r), std::invalid_argument);
}

TEST(Gateway, InFlightCapHolds) {
  auto backend = std::make_shared<SlowBackend>();
  ModelGateway gw(backend, nullptr, fast(3));
  std::vector<std::jthread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 4; ++k) gw.generate(request("t", "x#0"));
    });
  }
  threads.clear();
  EXPECT_LE(backend->peak_.load(), 3);
  EXPECT_LE(gw.stats().peak_in_flight, 3u);
  EXPECT_GE(gw.stats().peak_in_flight, 2u);
  EXPECT_EQ(gw.stats().requests, 48u);
}

TEST(Embedding, IdenticalTextsCosineOne) {
  auto emb = std::make_shared<MockEmbedder>();
  ModelGateway gw(std::make_shared<MockBackend>(), emb, fast());
  const auto a = gw.embed("a red bus");
  const auto b = gw.embed("a red bus");
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.dimension(), 256u);
  EXPECT_DOUBLE_EQ(cosine(a, b), 1.0);
  EXPECT_EQ(gw.embed("a").values, gw.embed("a").values);
}

TEST(Embedding, DisjointBucketsAreOrthogonal) {
  MockEmbedder emb;
  // Pick two tokens that land in different buckets.
  std::string x = "alpha", y = "beta";
  ASSERT_NE(emb.bucket_of(x), emb.bucket_of(y));
  EXPECT_EQ(cosine(emb.embed(x), emb.embed(y)), 0.0);
  // Token order does not matter.
  EXPECT_DOUBLE_EQ(cosine(emb.embed("alpha beta"), emb.embed("beta alpha")), 1.0);
}

TEST(Embedding, DimensionDriftIsFatal) {
  ModelGateway gw(std::make_shared<MockBackend>(), std::make_shared<FixedEmbedder>(), fast());
  gw.embed("ab");
  EXPECT_THROW(gw.embed("abc"), ConfigError);
  EXPECT_THROW(gw.embed(""), std::invalid_argument);
  ModelGateway none(std::make_shared<MockBackend>(), nullptr, fast());
  EXPECT_THROW(none.embed("x"), std::logic_error);
}

TEST(MockScriptJson, ParsesBothReplyForms) {
  const auto s = parse_mock_script(R"({"t": {"a#0": "plain", "a#1": {"text": "x", "transport_failures": 2},
                                            "a#2": {"backend_error": "boom"}}})");
  ASSERT_NE(s.find("t", "a#0"), nullptr);
  EXPECT_EQ(s.find("t", "a#0")->text, "plain");
  EXPECT_EQ(s.find("t", "a#1")->transport_failures, 2);
  EXPECT_EQ(s.find("t", "a#2")->backend_error, "boom");
  EXPECT_EQ(s.find("t", "a#3"), nullptr);
  EXPECT_THROW(parse_mock_script("[1]"), ConfigError);
  EXPECT_THROW(parse_mock_script(R"({"t": {"a": 3}})"), ConfigError);
}

}  // namespace
}  // namespace vqasynth::gateway
