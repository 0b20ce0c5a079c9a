#include <gtest/gtest.h>

#include "vqasynth/quality_metrics.hpp"
#include "vqasynth/triplet_parser.hpp"

namespace vqasynth::pipelines {
namespace {

const char* kValid =
    "<Question>: What is the make and model of the car in the foreground?\n"
    "<Short Answer>: The car in the foreground is a Mercedes-Benz C-Class.\n"
    "<Reasoned Answer>: The car has a distinctive front grille and logo ...\n";

const char* kTokenFormat =
    "<Question>: <Short Answer>\n"
    "<Answer>: Cow\n"
    "<Reason>: The object has black spot on ...\n";

const char* kUnfinished =
    "<Question>: What is the purpose of the white cart with the green \"space\" logo parked next to the\n"
    "<Short Answer>: Advertisement\n"
    "<Reasoned Answer>: ...\n";

const char* kHidden =
    "<Question>: How many people are in the image?\n"
    "<Short Answer>: 7\n"
    "<Reasoned Answer>: There are 7 people visible in the image, including the woman within the red rectangle.\n";

ParsedFields expect_fields(const ParseResult& r) {
  if (const auto* f = std::get_if<ParseFailure>(&r)) {
    ADD_FAILURE() << "unexpected failure: " << f->detail;
    return {};
  }
  return std::get<ParsedFields>(r);
}

ParseFailure expect_failure(const ParseResult& r) {
  if (std::holds_alternative<ParsedFields>(r)) {
    ADD_FAILURE() << "unexpected success";
    return {};
  }
  return std::get<ParseFailure>(r);
}

TEST(ParserCorpus, ValidTriplet) {
  const auto f = expect_fields(parse_triplet(kValid));
  EXPECT_EQ(f.question, "What is the make and model of the car in the foreground?");
  EXPECT_EQ(f.answer, "The car in the foreground is a Mercedes-Benz C-Class.");
  EXPECT_EQ(f.explanation, "The car has a distinctive front grille and logo ...");
}

TEST(ParserCorpus, TokenFormatError) {
  const auto f = expect_failure(parse_triplet(kTokenFormat));
  EXPECT_EQ(f.reason, Reason::kTokenFormatError);
  EXPECT_EQ(f.field, "question");
}

TEST(ParserCorpus, UnfinishedGeneration) {
  const auto f = expect_failure(parse_triplet(kUnfinished));
  EXPECT_EQ(f.reason, Reason::kUnfinishedGeneration);
  EXPECT_EQ(f.field, "question");
}

TEST(ParserCorpus, HiddenContextParsesButFailsValidity) {
  const auto f = expect_fields(parse_triplet(kHidden));
  Triplet t{f.question, f.answer, f.explanation, {}};
  const auto v = quality::validate_triplet(t, quality::ValidityRules::for_pipeline(PipelineKind::kSingleStepVip));
  EXPECT_EQ(v.reason, Reason::kHiddenContext);
  EXPECT_EQ(v.field, "explanation");
  // Only visual-prompt runs ban box vocabulary.
  EXPECT_TRUE(quality::validate_triplet(t, quality::ValidityRules::for_pipeline(PipelineKind::kSingleStep)).valid());
}

TEST(Dialects, ReasonAndReasonedAnswer) {
  const std::string reason = "Question: Which dog is asleep?\nShort Answer: The brown one.\nReason: Its eyes are closed.\n";
  const std::string reasoned =
      "Question: Which dog is asleep?\nShort Answer: The brown one.\nReasoned Answer: Its eyes are closed.\n";
  for (const auto& raw : {reason, reasoned}) {
    const auto f = expect_fields(parse_triplet(raw));
    EXPECT_EQ(f.explanation, "Its eyes are closed.");
  }
  EXPECT_EQ(expect_fields(parse_triplet(reason, Dialect::kReason)).explanation, "Its eyes are closed.");
  EXPECT_EQ(expect_fields(parse_triplet(reasoned, Dialect::kReasonedAnswer)).explanation, "Its eyes are closed.");
  EXPECT_EQ(expect_failure(parse_triplet(reasoned, Dialect::kReason)).field, "explanation");
  EXPECT_EQ(expect_failure(parse_triplet(reason, Dialect::kReasonedAnswer)).field, "explanation");
}

TEST(Dialects, EchoedTemplateIsIgnored) {
  const std::string raw =
      "Feedback:::\nQuestion: (your question with what prefix)\nShort Answer: (your brief answer)\nReason: (x)\n"
      "Feedback:::\nQuestion: What is on the plate?\nShort Answer: A slice of pizza.\nReason: Cheese covers it.\n";
  const auto f = expect_fields(parse_triplet(raw));
  EXPECT_EQ(f.question, "What is on the plate?");
  EXPECT_EQ(f.answer, "A slice of pizza.");
}

TEST(Dialects, MultilineValues) {
  const auto f = expect_fields(parse_triplet("Question: Where\nis the cat?\nShort Answer: On the sofa.\nReason: It lies\non the cushion.\n"));
  EXPECT_EQ(f.question, "Where\nis the cat?");
  EXPECT_EQ(f.explanation, "It lies\non the cushion.");
}

TEST(Dialects, InlineLabelWordIsNotALabel) {
  const auto f = expect_fields(
      parse_triplet("Question: What does the Reason: sign say?\nShort Answer: Stop.\nReason: The sign is red.\n"));
  EXPECT_EQ(f.question, "What does the Reason: sign say?");
}

TEST(Dialects, BulletValues) {
  const auto f = expect_fields(parse_triplet("- Which animal is resting?\n- A dog.\n- It lies still on the mat.\n"));
  EXPECT_EQ(f.question, "Which animal is resting?");
  EXPECT_EQ(f.answer, "A dog.");
  const auto numbered = expect_fields(parse_triplet("1. What is red?\n2) The bus.\n3. Paint covers it.\n"));
  EXPECT_EQ(numbered.answer, "The bus.");
  EXPECT_EQ(expect_failure(parse_triplet("- only two\n- lines\n")).reason, Reason::kTokenFormatError);
}

TEST(Failures, MissingFields) {
  EXPECT_EQ(expect_failure(parse_triplet("")).reason, Reason::kTokenFormatError);
  EXPECT_EQ(expect_failure(parse_triplet("Question: What?\nReason: Because.\n")).field, "answer");
  EXPECT_EQ(expect_failure(parse_triplet("Question: What?\nShort Answer: X\n")).field, "explanation");
  EXPECT_EQ(expect_failure(parse_triplet("Question: What?\nShort Answer:\nReason: Because.\n")).field, "answer");
  const auto unfinished = expect_failure(parse_triplet("Question: What?\nShort Answer: X\nReason: because the\n"));
  EXPECT_EQ(unfinished.reason, Reason::kUnfinishedGeneration);
  EXPECT_EQ(unfinished.field, "explanation");
}

TEST(Punctuation, TerminalForms) {
  EXPECT_TRUE(ends_with_terminal_punctuation("Done."));
  EXPECT_TRUE(ends_with_terminal_punctuation("Really?  "));
  EXPECT_TRUE(ends_with_terminal_punctuation("Wow!"));
  EXPECT_TRUE(ends_with_terminal_punctuation("He said \"stop.\""));
  EXPECT_TRUE(ends_with_terminal_punctuation("(a note.)"));
  EXPECT_TRUE(ends_with_terminal_punctuation("and then\xE2\x80\xA6"));
  EXPECT_TRUE(ends_with_terminal_punctuation("\xE2\x80\x9CYes.\xE2\x80\x9D"));
  EXPECT_FALSE(ends_with_terminal_punctuation("next to the"));
  EXPECT_FALSE(ends_with_terminal_punctuation(""));
  EXPECT_FALSE(ends_with_terminal_punctuation("a, b,"));
}

TEST(Sections, ReactReason) {
  const std::string raw = "Observation: A cat runs.\nThoughts: Cats move fast.\nAction: Look again.\nReason: A cat runs across the park.";
  EXPECT_EQ(extract_section(raw, "Reason"), "A cat runs across the park.");
  EXPECT_EQ(extract_section(raw, "Thoughts"), "Cats move fast.");
  EXPECT_FALSE(extract_section("Observation: x\nAction: y", "Reason").has_value());
}

}  // namespace
}  // namespace vqasynth::pipelines
