#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_support.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth {
namespace {

TEST(Fnv1a64, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(DeriveSeed, DependsOnEveryInput) {
  const auto base = derive_seed(42, "img001", 0);
  EXPECT_EQ(base, derive_seed(42, "img001", 0));
  EXPECT_NE(base, derive_seed(43, "img001", 0));
  EXPECT_NE(base, derive_seed(42, "img002", 0));
  EXPECT_NE(base, derive_seed(42, "img001", 1));
}

TEST(SeededRng, UniformIndexInRange) {
  SeededRng rng(7);
  for (std::uint64_t n = 1; n < 50; ++n) {
    for (int i = 0; i < 20; ++i) EXPECT_LT(rng.uniform_index(n), n);
  }
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform_real();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SeededRng, ShuffleIsPermutationAndReproducible) {
  std::vector<int> a(20), b(20);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  SeededRng r1(99), r2(99);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(20);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(sorted, expected);
}

TEST(Text, Helpers) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(to_lower("AbC"), "abc");
  EXPECT_EQ(collapse_whitespace(" a \t b\n\nc "), "a b c");
  EXPECT_EQ(split_whitespace(" x  y z "), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(strip_ascii_punctuation("a,b.c?"), "abc");
  EXPECT_EQ(clean_tokens("The Dog, sleeps."), (std::vector<std::string>{"the", "dog", "sleeps"}));
  EXPECT_TRUE(contains_case_insensitive("Inside the Red Box", "red box"));
  EXPECT_FALSE(contains_case_insensitive("abc", "abd"));
}

TEST(Files, AtomicWriteRoundTrip) {
  testing::TempDir dir;
  const auto path = (dir / "f.txt").string();
  write_file_atomic(path, "hello\n");
  EXPECT_EQ(read_file(path), "hello\n");
  write_file_atomic(path, "bye");
  EXPECT_EQ(read_file(path), "bye");
  EXPECT_THROW(read_file((dir / "missing").string()), std::exception);
}

}  // namespace
}  // namespace vqasynth
