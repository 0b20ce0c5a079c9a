#include <array>
#include <cstdlib>

#include "vqasynth/agreement.hpp"
#include "vqasynth/errors.hpp"

namespace vqasynth::quality {

namespace {

constexpr int kCategories = 3;

}  // namespace

std::optional<std::size_t> criterion_index(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (kCriteria[i] == name) return i;
  }
  return std::nullopt;
}

bool is_valid_rating(int value) noexcept { return value == kInvalidRating || (value >= 1 && value <= kCategories); }

double linear_weight(int k, int l) noexcept { return 1.0 - std::abs(k - l) / 2.0; }

Ac2Terms gwet_ac2_terms(const RatingTable& table) {
  const auto raters = table.raters();
  if (raters < 2) throw MetricError("agreement needs at least two raters");

  std::array<std::size_t, kCategories> counts{};
  std::size_t total = 0;
  double pa_sum = 0.0;
  std::size_t used = 0;

  for (std::size_t i = 0; i < table.items.size(); ++i) {
    const auto& row = table.items[i];
    if (row.size() != raters) throw MetricError("item " + std::to_string(i) + " has a different rater count");
    bool flagged = false;
    for (int v : row) {
      if (!is_valid_rating(v)) throw MetricError("rating " + std::to_string(v) + " outside {-1,1,2,3}");
      flagged = flagged || v == kInvalidRating;
    }
    if (flagged) continue;

    double pairs = 0.0;
    for (std::size_t a = 0; a < raters; ++a) {
      for (std::size_t b = a + 1; b < raters; ++b) pairs += linear_weight(row[a], row[b]);
    }
    pa_sum += pairs / static_cast<double>(raters * (raters - 1) / 2);
    for (int v : row) ++counts[static_cast<std::size_t>(v - 1)];
    total += raters;
    ++used;
  }
  if (used == 0) throw MetricError("no item has a complete set of valid ratings");

  double t_w = 0.0;
  for (int k = 1; k <= kCategories; ++k) {
    for (int l = 1; l <= kCategories; ++l) t_w += linear_weight(k, l);
  }
  double spread = 0.0;
  for (auto c : counts) {
    const double pi = static_cast<double>(c) / static_cast<double>(total);
    spread += pi * (1.0 - pi);
  }

  Ac2Terms t;
  t.items_used = used;
  t.p_a = pa_sum / static_cast<double>(used);
  t.p_e = t_w / (kCategories * (kCategories - 1)) * spread;
  t.ac2 = (t.p_a - t.p_e) / (1.0 - t.p_e);
  return t;
}

double gwet_ac2(const RatingTable& table) { return gwet_ac2_terms(table).ac2; }

RatingTable pool(const std::vector<RatingTable>& per_criterion) {
  RatingTable out;
  for (const auto& t : per_criterion) out.items.insert(out.items.end(), t.items.begin(), t.items.end());
  return out;
}

}  // namespace vqasynth::quality
