#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "test_support.hpp"
#include "vqasynth/errors.hpp"
#include "vqasynth/records.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::records {
namespace {

Record sample(std::size_t i) {
  std::mt19937_64 rng(i);
  Record r;
  r.index = i;
  r.image_id = "img" + std::to_string(i % 7);
  r.slot = i % 3;
  r.status = static_cast<SlotStatus>(i % 3);
  r.reason = r.status == SlotStatus::kValid ? Reason::kNone : static_cast<Reason>(1 + i % 8);
  r.stage = r.status == SlotStatus::kValid ? "" : "question";
  r.detail = r.status == SlotStatus::kValid ? "" : "detail \"quoted\"\n" + std::to_string(i);
  r.triplet.question = "What is item " + std::to_string(i) + "?";
  r.triplet.answer = "Thing \xC3\xA9 " + std::to_string(rng() % 100);
  r.triplet.explanation = "Because\tof reasons.";
  auto& m = r.triplet.meta;
  m.image_id = r.image_id;
  m.pipeline = static_cast<PipelineKind>(i % 3);
  m.prefix = "what";
  if (i % 2 == 0) m.object = corpus::SceneGraphObject{"cow", int(i), 2, 3, 4};
  m.model = "mock";
  m.seed = rng();
  m.raw = {"raw " + std::to_string(i)};
  if (m.pipeline == PipelineKind::kMultiStep) {
    m.candidates = {"a.", "b.", "c."};
    m.candidate_sources = {"base", "cot", "react"};
    m.candidate_scores = {std::ldexp(static_cast<double>(rng() % 1000), -10), 1.0 / 3.0, 0.1};
    m.winner = i % 3;
  }
  return r;
}

TEST(Records, RoundTripHundred) {
  for (std::size_t i = 0; i < 100; ++i) {
    const auto r = sample(i);
    const auto line = to_json_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(from_json_line(line), r) << line;
    EXPECT_EQ(to_json_line(from_json_line(line)), line);
  }
}

TEST(Records, DurationStaysOutOfTheLine) {
  auto r = sample(1);
  r.triplet.meta.duration_ms = 12.5;
  const auto line = to_json_line(r);
  EXPECT_EQ(line.find("duration"), std::string::npos);
  auto zero = r;
  zero.triplet.meta.duration_ms = 0;
  EXPECT_EQ(line, to_json_line(zero));
}

TEST(Records, GoldenLine) {
  Record r;
  r.index = 4;
  r.image_id = "img004";
  r.slot = 1;
  r.triplet.question = "Which animal is resting?";
  r.triplet.answer = "A dog.";
  r.triplet.explanation = "It lies still.";
  r.triplet.meta.image_id = "img004";
  r.triplet.meta.prefix = "which";
  r.triplet.meta.model = "mock-lvlm";
  r.triplet.meta.seed = 7;
  r.triplet.meta.raw = {"Question: Which animal is resting?"};
  EXPECT_EQ(to_json_line(r),
            R"({"id":"img004:1","index":4,"image_id":"img004","slot":1,"status":"valid","reason":"none","stage":"",)"
            R"("detail":"","question":"Which animal is resting?","answer":"A dog.","explanation":"It lies still.",)"
            R"("meta":{"pipeline":"single-step","prefix":"which","object":null,"model":"mock-lvlm","seed":7,)"
            R"("raw":["Question: Which animal is resting?"],"candidates":[],"candidate_sources":[],)"
            R"("candidate_scores":[],"winner":null}})");
  EXPECT_EQ(triplet_id(r), "img004:1");
}

TEST(Records, BadLinesCarryLineNumber) {
  const auto line = to_json_line(sample(3));
  try {
    from_json_line(line.substr(0, line.size() / 2), 17);
    FAIL() << "expected DatasetFormatError";
  } catch (const DatasetFormatError& e) {
    EXPECT_EQ(e.line(), 17u);
  }
  EXPECT_THROW(from_json_line(R"({"id":"x"})", 2), DatasetFormatError);
  auto bad = line;
  bad.replace(bad.find("\"status\":\""), 10 + 5, "\"status\":\"weird");
  EXPECT_THROW(from_json_line(bad), DatasetFormatError);
}

TEST(Records, FileRoundTripAndTruncatedFile) {
  testing::TempDir dir;
  std::vector<Record> rs;
  for (std::size_t i = 0; i < 20; ++i) rs.push_back(sample(i));
  write_dataset(dir / "d.jsonl", rs);
  EXPECT_EQ(read_dataset(dir / "d.jsonl"), rs);

  auto text = read_file((dir / "d.jsonl").string());
  text.resize(text.size() - 30);
  write_file_atomic((dir / "t.jsonl").string(), text);
  try {
    read_dataset(dir / "t.jsonl");
    FAIL() << "expected DatasetFormatError";
  } catch (const DatasetFormatError& e) {
    EXPECT_EQ(e.line(), 20u);
  }
}

TEST(Records, BlankLinesIgnored) {
  testing::TempDir dir;
  std::ofstream(dir / "d.jsonl") << to_json_line(sample(0)) << "\n\n" << to_json_line(sample(1)) << "\n";
  EXPECT_EQ(read_dataset(dir / "d.jsonl").size(), 2u);
}

TEST(Journal, AppendsAndDropsTornTail) {
  testing::TempDir dir;
  const auto path = dir / "j.jsonl";
  {
    JournalWriter w(path);
    for (std::size_t i = 0; i < 5; ++i) w.append(sample(i));
  }
  {
    JournalWriter w(path);
    w.append(sample(5));
  }
  EXPECT_EQ(read_journal(path).size(), 6u);
  std::ofstream(path, std::ios::app) << to_json_line(sample(6)).substr(0, 25);
  const auto back = read_journal(path);
  ASSERT_EQ(back.size(), 6u);
  EXPECT_EQ(back[5], sample(5));
  EXPECT_TRUE(read_journal(dir / "absent.jsonl").empty());
}

TEST(Enums, RoundTrip) {
  for (auto k : {PipelineKind::kSingleStep, PipelineKind::kSingleStepVip, PipelineKind::kMultiStep}) {
    EXPECT_EQ(pipeline_from_string(to_string(k)), k);
  }
  for (int i = 0; i <= static_cast<int>(Reason::kNoEligibleObject); ++i) {
    EXPECT_EQ(reason_from_string(to_string(static_cast<Reason>(i))), static_cast<Reason>(i));
  }
  EXPECT_EQ(status_from_string("skipped"), SlotStatus::kSkipped);
  EXPECT_FALSE(status_from_string("done").has_value());
}

}  // namespace
}  // namespace vqasynth::records
