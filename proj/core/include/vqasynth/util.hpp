#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vqasynth {

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// splitmix64 finalizer over the combination of two words.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

// Per-slot seed; independent of scheduling order.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view image_id, std::uint64_t slot) noexcept;

// mt19937_64 with a fully specified index reduction. The <random>
// distributions are implementation-defined, this is not.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept : engine_(seed) {}

  std::uint64_t next() noexcept;

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  // Uniform real in [0, 1).
  double uniform_real() noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
std::string collapse_whitespace(std::string_view text);
std::vector<std::string> split_whitespace(std::string_view text);
std::string strip_ascii_punctuation(std::string_view text);

// Lowercased, punctuation-free whitespace tokens.
std::vector<std::string> clean_tokens(std::string_view text);

bool contains_case_insensitive(std::string_view haystack, std::string_view needle);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace vqasynth
