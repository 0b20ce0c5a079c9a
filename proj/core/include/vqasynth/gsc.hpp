#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vqasynth/model_gateway.hpp"

namespace vqasynth::pipelines {

enum class SimilarityMode { kUnigram, kEmbedding };

std::string_view to_string(SimilarityMode mode) noexcept;

// Jaccard index over lowercased whitespace unigram sets.
double unigram_similarity(std::string_view a, std::string_view b);

// Cosine clamped to [0, 1].
double embedding_similarity(const gateway::EmbeddingVector& a, const gateway::EmbeddingVector& b);

// Throws std::invalid_argument on empty input. `embedder` is required for
// embedding mode.
double similarity(std::string_view a, std::string_view b, SimilarityMode mode,
                  gateway::EmbeddingProvider* embedder = nullptr);

struct CandidateSet {
  std::vector<std::string> candidates;
  std::vector<std::string> sources;  // parallel to candidates, e.g. base/cot/react
};

struct GscResult {
  std::size_t winner = 0;
  std::vector<double> scores;
};

// scores[i] = mean of sim[i][j] over j != i; winner = argmax, lowest index on
// ties. `sim` must be K x K with K >= 2.
GscResult gsc_from_matrix(const std::vector<std::vector<double>>& sim);

// Pairwise similarities are computed once per unordered pair.
GscResult gsc_select(const std::vector<gateway::EmbeddingVector>& embeddings);

GscResult gsc_select(const CandidateSet& set, SimilarityMode mode,
                     const std::function<gateway::EmbeddingVector(std::string_view)>& embed = {});

}  // namespace vqasynth::pipelines
