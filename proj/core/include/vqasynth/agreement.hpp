#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vqasynth::quality {

// Rubric criteria, in export column order.
inline constexpr std::array<std::string_view, 5> kCriteria{"accuracy", "logic", "clarity", "detail", "relevancy"};

std::optional<std::size_t> criterion_index(std::string_view name) noexcept;

// Ratings in {1,2,3}; -1 flags an invalid triplet.
inline constexpr int kInvalidRating = -1;
bool is_valid_rating(int value) noexcept;

// items x raters. Every row must have the same length.
struct RatingTable {
  std::vector<std::vector<int>> items;

  std::size_t raters() const noexcept { return items.empty() ? 0 : items.front().size(); }
};

// Ordinal weight over {1,2,3}: 1 - |k - l| / 2.
double linear_weight(int k, int l) noexcept;

struct Ac2Terms {
  double p_a = 0.0;
  double p_e = 0.0;
  double ac2 = 0.0;
  std::size_t items_used = 0;
};

// Gwet's AC2 with linear weights. Rows containing -1 are dropped. Throws
// MetricError for fewer than two raters, ragged rows, out-of-range cells or
// no usable rows.
Ac2Terms gwet_ac2_terms(const RatingTable& table);
double gwet_ac2(const RatingTable& table);

// All criteria stacked into one table.
RatingTable pool(const std::vector<RatingTable>& per_criterion);

}  // namespace vqasynth::quality
