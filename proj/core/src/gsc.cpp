#include "vqasynth/gsc.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "vqasynth/util.hpp"

namespace vqasynth::pipelines {

std::string_view to_string(SimilarityMode mode) noexcept {
  return mode == SimilarityMode::kUnigram ? "unigram" : "embedding";
}

double unigram_similarity(std::string_view a, std::string_view b) {
  const auto ta = split_whitespace(to_lower(a));
  const auto tb = split_whitespace(to_lower(b));
  if (ta.empty() || tb.empty()) throw std::invalid_argument("unigram similarity needs nonempty texts");
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  std::size_t shared = 0;
  for (const auto& t : sa) shared += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(uni);
}

double embedding_similarity(const gateway::EmbeddingVector& a, const gateway::EmbeddingVector& b) {
  return std::clamp(gateway::cosine(a, b), 0.0, 1.0);
}

double similarity(std::string_view a, std::string_view b, SimilarityMode mode, gateway::EmbeddingProvider* embedder) {
  if (trim(a).empty() || trim(b).empty()) throw std::invalid_argument("similarity needs nonempty texts");
  if (mode == SimilarityMode::kUnigram) return unigram_similarity(a, b);
  if (!embedder) throw std::invalid_argument("embedding similarity needs an embedding provider");
  return embedding_similarity(embedder->embed(a), embedder->embed(b));
}

GscResult gsc_from_matrix(const std::vector<std::vector<double>>& sim) {
  const std::size_t k = sim.size();
  if (k < 2) throw std::invalid_argument("self-consistency selection needs at least 2 candidates");
  GscResult out;
  out.scores.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (sim[i].size() != k) throw std::invalid_argument("similarity matrix must be square");
    double total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) total += sim[i][j];
    }
    out.scores[i] = total / static_cast<double>(k - 1);
  }
  for (std::size_t i = 1; i < k; ++i) {
    if (out.scores[i] > out.scores[out.winner]) out.winner = i;
  }
  return out;
}

GscResult gsc_select(const std::vector<gateway::EmbeddingVector>& embeddings) {
  const std::size_t k = embeddings.size();
  if (k < 2) throw std::invalid_argument("self-consistency selection needs at least 2 candidates");
  std::vector<std::vector<double>> sim(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) sim[i][j] = sim[j][i] = embedding_similarity(embeddings[i], embeddings[j]);
  }
  return gsc_from_matrix(sim);
}

GscResult gsc_select(const CandidateSet& set, SimilarityMode mode,
                     const std::function<gateway::EmbeddingVector(std::string_view)>& embed) {
  const std::size_t k = set.candidates.size();
  if (k < 2) throw std::invalid_argument("self-consistency selection needs at least 2 candidates");
  for (const auto& c : set.candidates) {
    if (trim(c).empty()) throw std::invalid_argument("candidate explanations must be nonempty");
  }
  if (mode == SimilarityMode::kEmbedding) {
    if (!embed) throw std::invalid_argument("embedding mode needs an embedding function");
    std::vector<gateway::EmbeddingVector> vecs;
    vecs.reserve(k);
    for (const auto& c : set.candidates) vecs.push_back(embed(c));
    return gsc_select(vecs);
  }
  std::vector<std::vector<double>> sim(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      sim[i][j] = sim[j][i] = unigram_similarity(set.candidates[i], set.candidates[j]);
    }
  }
  return gsc_from_matrix(sim);
}

}  // namespace vqasynth::pipelines
