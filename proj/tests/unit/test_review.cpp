#include <gtest/gtest.h>
#include <httplib.h>

#include <json.hpp>
#include <thread>

#include "test_support.hpp"
#include "vqasynth/image.hpp"
#include "vqasynth/records.hpp"
#include "vqasynth/review_service.hpp"
#include "vqasynth/runner.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::runner {
namespace {

using nlohmann::json;
using testing::fixture;

class ReviewApi : public ::testing::Test {
 protected:
  void SetUp() override {
    auto cfg = load_run_config(fixture("runs/vip.yaml"));
    cfg.output_dir = dir_ / "run";
    dataset_ = run(cfg).outputs.dataset;
    dataset_bytes_ = read_file(dataset_.string());
    service_ = std::make_unique<ReviewService>(
        ReviewOptions{dataset_, fixture("corpus/images"), dir_ / "scores.jsonl", {}});
    port_ = service_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_->serve(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !client_->Get("/api/agreement"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  void TearDown() override {
    service_->stop();
    thread_.join();
    EXPECT_EQ(read_file(dataset_.string()), dataset_bytes_);
  }

  httplib::Result post_score(const std::string& id, const std::string& rater, int value) {
    json body{{"triplet_id", id},
              {"rater", rater},
              {"scores", {{"accuracy", value}, {"logic", value}, {"clarity", value}, {"detail", value}, {"relevancy", value}}}};
    return client_->Post("/api/scores", body.dump(), "application/json");
  }

  json get_json(const std::string& path) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200) << path;
    return json::parse(res->body);
  }

  testing::TempDir dir_;
  std::filesystem::path dataset_;
  std::string dataset_bytes_;
  std::unique_ptr<ReviewService> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(ReviewApi, ListsQueue) {
  EXPECT_EQ(service_->triplet_count(), 24u);
  const auto q = get_json("/api/triplets");
  EXPECT_EQ(q["total"], 24);
  EXPECT_TRUE(q["rater"].is_null());
  ASSERT_EQ(q["items"].size(), 24u);
  const auto& first = q["items"][0];
  EXPECT_EQ(first["id"], first["image_id"].get<std::string>() + ":" + std::to_string(first["slot"].get<int>()));
  EXPECT_TRUE(first["annotated"].get<bool>());
  EXPECT_FALSE(first["object"].is_null());
  EXPECT_FALSE(first.contains("scored"));
}

TEST_F(ReviewApi, SingleTriplet) {
  const auto q = get_json("/api/triplets");
  const std::string id = q["items"][3]["id"];
  const auto t = get_json("/api/triplets/" + id);
  EXPECT_EQ(t, q["items"][3]);
  EXPECT_EQ(client_->Get("/api/triplets/nope:0")->status, 404);
}

TEST_F(ReviewApi, ScoresFilterTheQueue) {
  const auto q = get_json("/api/triplets");
  const std::string a = q["items"][0]["id"], b = q["items"][1]["id"];
  auto r = post_score(a, "alice", 3);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["overwritten"], false);
  r = post_score(a, "alice", 2);
  EXPECT_EQ(json::parse(r->body)["overwritten"], true);
  post_score(b, "bob", 3);

  const auto alice = get_json("/api/triplets?rater=alice&unscored=1");
  EXPECT_EQ(alice["scored"], 1);
  EXPECT_EQ(alice["items"].size(), 23u);
  for (const auto& it : alice["items"]) {
    EXPECT_NE(it["id"], a);
    EXPECT_FALSE(it["scored"].get<bool>());
  }
  httplib::Headers h{{"X-Rater-Id", "bob"}};
  auto res = client_->Get("/api/triplets", h);
  const auto bob = json::parse(res->body);
  EXPECT_EQ(bob["rater"], "bob");
  EXPECT_TRUE(bob["items"][1]["scored"].get<bool>());
  EXPECT_EQ(client_->Get("/api/triplets?unscored=1")->status, 400);
}

TEST_F(ReviewApi, RejectsBadSubmissions) {
  const std::string id = get_json("/api/triplets")["items"][0]["id"];
  EXPECT_EQ(post_score(id, "alice", 4)->status, 400);
  EXPECT_EQ(post_score("nope:0", "alice", 3)->status, 404);
  EXPECT_EQ(post_score(id, "", 3)->status, 400);
  EXPECT_EQ(client_->Post("/api/scores", "{", "application/json")->status, 400);
  // Rater supplied by header instead of the body.
  json body{{"triplet_id", id},
            {"scores", {{"accuracy", 1}, {"logic", 1}, {"clarity", 1}, {"detail", 1}, {"relevancy", 1}}}};
  auto res = client_->Post("/api/scores", httplib::Headers{{"X-Rater-Id", "carol"}}, body.dump(), "application/json");
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(get_json("/api/triplets?rater=carol")["scored"], 1);
}

TEST_F(ReviewApi, AgreementAndExport) {
  const auto q = get_json("/api/triplets");
  for (int i = 0; i < 4; ++i) {
    for (const char* rater : {"alice", "bob"}) ASSERT_EQ(post_score(q["items"][i]["id"], rater, 3)->status, 200);
  }
  const auto a = get_json("/api/agreement");
  EXPECT_EQ(a["items"], 4);
  EXPECT_DOUBLE_EQ(a["overall"]["ac2"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(a["criteria"]["accuracy"]["ac2"].get<double>(), 1.0);

  auto csv = client_->Get("/api/export");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");
  EXPECT_EQ(csv->body,
            "rater,accuracy,logic,clarity,detail,relevancy,avg\n"
            "alice,3.0000,3.0000,3.0000,3.0000,3.0000,3.0000\n"
            "bob,3.0000,3.0000,3.0000,3.0000,3.0000,3.0000\n"
            "AVG,3.0000,3.0000,3.0000,3.0000,3.0000,3.0000\n");
}

TEST_F(ReviewApi, ServesAnnotatedImage) {
  const auto item = get_json("/api/triplets")["items"][0];
  auto res = client_->Get("/api/images/" + item["id"].get<std::string>());
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  const auto img = vision::decode_image(std::vector<std::uint8_t>(res->body.begin(), res->body.end()));
  const int x = item["object"]["x"], y = item["object"]["y"];
  EXPECT_EQ(img.at(x, y), (vision::Rgb{255, 0, 0}));
  EXPECT_EQ(client_->Get("/api/images/nope:0")->status, 404);
}

TEST_F(ReviewApi, ScoresSurviveRestart) {
  const std::string id = get_json("/api/triplets")["items"][0]["id"];
  post_score(id, "alice", 2);
  ReviewService second({dataset_, fixture("corpus/images"), dir_ / "scores.jsonl", {}});
  const int port = second.bind("127.0.0.1", 0);
  std::thread t([&] { second.serve(); });
  httplib::Client c("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 200 && !(res = c.Get("/api/triplets?rater=alice")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["scored"], 1);
  second.stop();
  t.join();
}

}  // namespace
}  // namespace vqasynth::runner
