#include "slipforge/scorer.hpp"

#include <cmath>

#include "slipforge/baselines.hpp"
#include "slipforge/error.hpp"
#include "slipforge/rng.hpp"

namespace slipforge {

EdgeVector edge_vector_of(const Fragment& f) {
  return extract_edge_vector(f.edge, f.group == Group::upper ? EdgeRole::upper_bottom : EdgeRole::lower_top, f.id);
}

void EdgeVectorCache::fill(const DatasetManifest& dataset) {
  cache_.clear();
  cache_.reserve(dataset.fragments.size());
  for (const auto& f : dataset.fragments) cache_.emplace(f.id, edge_vector_of(f));
}

EdgeVector EdgeVectorCache::get(const Fragment& f) const {
  auto it = cache_.find(f.id);
  return it != cache_.end() ? it->second : edge_vector_of(f);
}

void EmbeddingScorer::prepare(const DatasetManifest& dataset) {
  model_->validate();
  cache_.clear();
  std::vector<Embedding> out(dataset.fragments.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(out.size()); ++i) {
    out[i] = embed(*model_, edge_vector_of(dataset.fragments[i]));
  }
  for (std::size_t i = 0; i < out.size(); ++i) cache_.emplace(dataset.fragments[i].id, std::move(out[i]));
}

Embedding EmbeddingScorer::embedding_of(const Fragment& f) const {
  auto it = cache_.find(f.id);
  return it != cache_.end() ? it->second : embed(*model_, edge_vector_of(f));
}

double EmbeddingScorer::score(const Fragment& target, const Fragment& candidate) const {
  auto ta = cache_.find(target.id);
  auto tc = cache_.find(candidate.id);
  if (ta != cache_.end() && tc != cache_.end())
    return confidence_from_distance(embedding_distance(ta->second, tc->second));
  return confidence_from_distance(embedding_distance(embedding_of(target), embedding_of(candidate)));
}

double CosineScorer::score(const Fragment& target, const Fragment& candidate) const {
  const auto a = cache_.get(target);
  const auto b = cache_.get(candidate);
  try {
    return cosine_similarity(a, b);
  } catch (const InputError&) {
    return 0.0;
  }
}

double DtwScorer::score(const Fragment& target, const Fragment& candidate) const {
  const auto a = cache_.get(target);
  const auto b = cache_.get(candidate);
  return -dtw_distance(a.view(), b.view());
}

double DtwScorer::confidence(double score) const {
  return std::exp(score / static_cast<double>(kEdgeDim));
}

namespace {

std::uint64_t hash_id(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double RandomScorer::score(const Fragment& target, const Fragment& candidate) const {
  // Counter-based draw; seeding a full generator per pair dominated the cost.
  std::uint64_t key = derive_seed(derive_seed(seed_, hash_id(target.id)), hash_id(candidate.id));
  double u = to_unit(key);
  while (u == 0.0) u = to_unit(key = mix_seed(key));
  return u;
}

void GroundTruthScorer::prepare(const DatasetManifest& dataset) {
  match_.clear();
  for (const auto& gt : dataset.ground_truth) {
    match_.emplace(gt.upper_id, gt.lower_id);
    match_.emplace(gt.lower_id, gt.upper_id);
  }
}

double GroundTruthScorer::score(const Fragment& target, const Fragment& candidate) const {
  auto it = match_.find(target.id);
  return it != match_.end() && it->second == candidate.id ? 1.0 : 0.0;
}

std::unique_ptr<Scorer> make_scorer(const std::string& method, std::shared_ptr<const EmbeddingModel> model,
                                    std::uint64_t seed) {
  if (method == "wisepanda") {
    if (!model) throw InputError("method wisepanda needs a trained model");
    return std::make_unique<EmbeddingScorer>(std::move(model));
  }
  if (method == "dtw") return std::make_unique<DtwScorer>();
  if (method == "cosine") return std::make_unique<CosineScorer>();
  if (method == "random") return std::make_unique<RandomScorer>(seed);
  if (method == "oracle") return std::make_unique<GroundTruthScorer>();
  throw InputError("unknown method '" + method + "'");
}

}  // namespace slipforge
