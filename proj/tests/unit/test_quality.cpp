#include <gtest/gtest.h>

#include <cmath>

#include "vqasynth/errors.hpp"
#include "vqasynth/quality_metrics.hpp"

namespace vqasynth::quality {
namespace {

Triplet make(std::string q, std::string a, std::string e) { return Triplet{std::move(q), std::move(a), std::move(e), {}}; }

const ValidityRules kVip = ValidityRules::for_pipeline(PipelineKind::kSingleStepVip);
const ValidityRules kSingle = ValidityRules::for_pipeline(PipelineKind::kSingleStep);

TEST(Validity, TableSamples) {
  const auto valid = make("What is the make and model of the car in the foreground?",
                          "The car in the foreground is a Mercedes-Benz C-Class.",
                          "The car has a distinctive front grille and logo ...");
  EXPECT_TRUE(validate_triplet(valid, kSingle).valid());
  EXPECT_TRUE(validate_triplet(valid, kVip).valid());
  const auto hidden = make("How many people are in the image?", "7",
                           "There are 7 people visible in the image, including the woman within the red rectangle.");
  EXPECT_EQ(validate_triplet(hidden, kVip).reason, Reason::kHiddenContext);
}

TEST(Validity, RuleOrder) {
  EXPECT_EQ(validate_triplet(make("What?", "", "Because."), kSingle).reason, Reason::kTokenFormatError);
  EXPECT_EQ(validate_triplet(make("What?", "", "Because."), kSingle).field, "answer");
  EXPECT_EQ(validate_triplet(make("What is {prefix}?", "A.", "B."), kSingle).reason, Reason::kTokenFormatError);
  EXPECT_EQ(validate_triplet(make("What?", "<Short Answer>", "B."), kSingle).reason, Reason::kTokenFormatError);
  EXPECT_EQ(validate_triplet(make("What is it", "A.", "B."), kSingle).reason, Reason::kUnfinishedGeneration);
  EXPECT_EQ(validate_triplet(make("What?", "A.", "because the"), kSingle).reason, Reason::kUnfinishedGeneration);
  EXPECT_EQ(validate_triplet(make("Name the animal.", "Cow.", "It moos."), kSingle).reason, Reason::kQuestionFormat);
  // Answers may be short phrases.
  EXPECT_TRUE(validate_triplet(make("What?", "Cow", "It moos."), kSingle).valid());
  ValidityRules relaxed = kSingle;
  relaxed.require_question_mark = false;
  EXPECT_TRUE(validate_triplet(make("Name the animal.", "Cow.", "It moos."), relaxed).valid());
}

TEST(Validity, BannedPhrasesAnyFieldCaseInsensitive) {
  EXPECT_EQ(validate_triplet(make("What is in the Bounding Box?", "A cat.", "It is a cat."), kVip).reason,
            Reason::kHiddenContext);
  EXPECT_EQ(validate_triplet(make("What is it?", "The highlighted cat.", "It is a cat."), kVip).field, "answer");
  EXPECT_EQ(default_banned_phrases().size(), 6u);
  EXPECT_TRUE(kSingle.banned_phrases.empty());
}

TEST(Validity, Pure) {
  const auto t = make("What is it?", "A cat.", "It is in the red box.");
  const auto a = validate_triplet(t, kVip);
  const auto b = validate_triplet(t, kVip);
  EXPECT_EQ(a.reason, b.reason);
  EXPECT_EQ(a.detail, b.detail);
}

TEST(Dedup, ExactOnAllThreeFields) {
  const std::vector<Triplet> in{make("Q?", "A.", "E."), make("Q?", "A.", "E."), make("Q?", "A.", "F."),
                               make(" Q? ", "A.", "E.  ")};
  const auto r = dedup_triplets(in);
  EXPECT_EQ(r.unique.size(), 2u);
  EXPECT_EQ(r.duplicates, 2u);
  EXPECT_EQ(r.unique[1].explanation, "F.");
  const auto again = dedup_triplets(r.unique);
  EXPECT_EQ(again.duplicates, 0u);
  EXPECT_EQ(again.unique, r.unique);
}

TEST(Dedup, TableOneRow) {
  // 19,309 valid, 3,981 of them repeats -> 15,328 unique.
  std::vector<Triplet> valid;
  valid.reserve(19309);
  for (int i = 0; i < 15328; ++i) valid.push_back(make("Q" + std::to_string(i) + "?", "A.", "E."));
  for (int i = 0; i < 3981; ++i) valid.push_back(valid[static_cast<std::size_t>(i * 3)]);
  const auto r = dedup_triplets(valid);
  EXPECT_EQ(r.unique.size(), 15328u);
  EXPECT_EQ(r.duplicates, 3981u);
  const auto stats = corpus_stats(valid, 20501, 20501 - 19309);
  EXPECT_NEAR(stats.valid_pct_of_expected(), 94.2, 0.05);
  EXPECT_NEAR(stats.valid_pct_of_resolved(), 94.2, 0.05);
  EXPECT_NEAR(stats.unique_pct(), 79.4, 0.05);
}

TEST(CorpusStats, HandTokenization) {
  const std::vector<std::string> texts{"The cat, the cat."};
  const auto c = component_stats(texts);
  EXPECT_EQ(c.vocabulary, 2u);
  EXPECT_DOUBLE_EQ(c.average_length, 4.0);
  const auto empty = component_stats(std::span<const std::string>{});
  EXPECT_EQ(empty.vocabulary, 0u);
  EXPECT_EQ(empty.average_length, 0.0);
  const std::vector<Triplet> ts{make("What is it?", "A cat.", "It is a cat.")};
  EXPECT_THROW(corpus_stats(ts, 0), MetricError);
  const auto s = corpus_stats(ts, 2);
  EXPECT_EQ(s.question.vocabulary, 3u);
  EXPECT_DOUBLE_EQ(s.explanation.average_length, 4.0);
  EXPECT_DOUBLE_EQ(s.valid_pct_of_expected(), 50.0);
}

TEST(Histogram, Counting) {
  const std::vector<std::string> texts{"a b", "a b", "c"};
  const auto h = length_histogram(texts);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_DOUBLE_EQ(h.at(1), 1.0 / 3);
  EXPECT_DOUBLE_EQ(h.at(2), 2.0 / 3);
  EXPECT_EQ(length_histogram(std::vector<std::string>{"x y z"}).size(), 1u);
  EXPECT_THROW(length_histogram(std::vector<std::string>{}), MetricError);
  const auto al = align({{1, 0.5}, {3, 0.5}}, {{2, 1.0}});
  EXPECT_EQ(al.support, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(al.p, (std::vector<double>{0.5, 0, 0.5}));
  EXPECT_EQ(al.q, (std::vector<double>{0, 1, 0}));
}

TEST(Jsd, Examples) {
  const std::vector<double> p{0.5, 0.5}, a{1, 0}, b{0, 1};
  EXPECT_EQ(jsd(p, p), 0.0);
  EXPECT_EQ(jsd(a, b), 1.0);
  EXPECT_NEAR(jsd(p, a), 0.31127812445913283, 1e-12);
  EXPECT_DOUBLE_EQ(jsd(p, a), jsd(a, p));
  EXPECT_THROW(jsd(p, std::vector<double>{1.0}), MetricError);
  EXPECT_THROW(jsd(p, std::vector<double>{0.6, 0.6}), MetricError);
  EXPECT_THROW(jsd(p, std::vector<double>{1.5, -0.5}), MetricError);
}

TEST(Pearson, Examples) {
  const std::vector<double> x{1, 2, 3}, y{1, 3, 2}, r{3, 2, 1};
  EXPECT_NEAR(pearson(x, y), 0.5, 1e-12);
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, r), -1.0, 1e-12);
  EXPECT_NEAR(pearson(y, x), pearson(x, y), 1e-15);
  const std::vector<double> scaled{10, 30, 20};
  EXPECT_NEAR(pearson(x, scaled), 0.5, 1e-12);
  EXPECT_THROW(pearson(x, std::vector<double>{2, 2, 2}), MetricError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), MetricError);
}

TEST(SimilarityReport, IdenticalCorporaAreClose) {
  const std::vector<Triplet> a{make("What is it?", "A cat.", "It is a cat."), make("Where is the dog?", "Outside.", "The dog is in the yard now."),
                              make("Who holds the leash?", "A boy.", "A boy holds it.")};
  const auto r = similarity_report(a, a);
  EXPECT_EQ(r.jsd_avg, 0.0);
  ASSERT_TRUE(r.question.pearson.has_value());
  EXPECT_NEAR(*r.question.pearson, 1.0, 1e-12);
  // One-bin answer histograms have no Pearson value.
  const std::vector<Triplet> b{make("What?", "A cat.", "It is."), make("Who?", "A dog.", "He is.")};
  const auto rb = similarity_report(b, b);
  EXPECT_FALSE(rb.answer.pearson.has_value());
  EXPECT_FALSE(rb.answer.note.empty());
}

TEST(Efficiency, TableFourRows) {
  const auto single = efficiency_report(1001, 476, 42.1);
  EXPECT_EQ(std::round(single.seconds_per_valid * 100) / 100, 2.10);
  ASSERT_TRUE(single.speedup.has_value());
  EXPECT_EQ(std::round(*single.speedup * 10) / 10, 20.0);
  const auto vip = efficiency_report(954, 450);
  EXPECT_EQ(std::round(vip.seconds_per_valid * 100) / 100, 2.12);
  EXPECT_FALSE(vip.speedup.has_value());
  EXPECT_EQ(efficiency_report(100, 50).seconds_per_valid, 2.0);
  EXPECT_NEAR(single.seconds_per_valid * 476, 1001.0, 1e-9);
  EXPECT_THROW(efficiency_report(10, 0), MetricError);
  EXPECT_THROW(efficiency_report(0, 10), MetricError);
}

TEST(Efficiency, DurationFormat) {
  EXPECT_EQ(format_duration(1001), "16m 41s");
  EXPECT_EQ(format_duration(954), "15m 54s");
  EXPECT_EQ(format_duration(21005), "5h 50m 5s");
  EXPECT_EQ(format_duration(4011), "1h 6m 51s");
}

TEST(Rouge, Examples) {
  const auto r = rouge_l("the cat sat", "the cat");
  EXPECT_DOUBLE_EQ(r.precision, 1.0 * 2 / 3);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_NEAR(r.f1, 0.8, 1e-12);
  // Argument order swaps precision and recall.
  const auto s = rouge_l("the cat", "the cat sat");
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_NEAR(s.recall, 2.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(rouge_l("A b c", "a B c").f1, 1.0);
  EXPECT_EQ(rouge_l("x y", "z w").f1, 0.0);
  EXPECT_THROW(rouge_l("", "a"), MetricError);
  EXPECT_NEAR(rouge_1("the the cat", "the cat cat").f1, 2.0 / 3, 1e-12);
  const std::vector<std::string> a{"a", "b", "c", "d"}, b{"b", "d", "a"};
  EXPECT_EQ(lcs_length(a, b), 2u);
}

TEST(Rouge, QaExplanationMean) {
  const std::vector<Triplet> ts{make("the cat", "sat", "the cat sat"), make("x", "y", "z")};
  const auto s = qa_explanation_rouge(ts);
  EXPECT_EQ(s.pairs, 2u);
  EXPECT_DOUBLE_EQ(s.rouge_l_f1, 0.5);
}

}  // namespace
}  // namespace vqasynth::quality
