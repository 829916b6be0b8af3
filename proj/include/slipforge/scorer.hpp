#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>

#include "slipforge/dataset.hpp"
#include "slipforge/features.hpp"
#include "slipforge/matcher.hpp"

namespace slipforge {

/// Pairwise matcher used by ranking and evaluation. After prepare() returns,
/// score() must be safe to call concurrently.
class Scorer {
public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  /// Precompute per-fragment state for every fragment that may be scored.
  virtual void prepare(const DatasetManifest&) {}
  /// Higher means a more likely match.
  virtual double score(const Fragment& target, const Fragment& candidate) const = 0;
  /// Display confidence in (0, 1] for a raw score.
  virtual double confidence(double score) const { return score; }
};

EdgeVector edge_vector_of(const Fragment& f);

/// Shared cache of per-fragment edge vectors, filled in prepare().
class EdgeVectorCache {
public:
  void fill(const DatasetManifest& dataset);
  /// Falls back to computing the vector when the fragment was not prepared.
  EdgeVector get(const Fragment& f) const;

private:
  std::unordered_map<std::string, EdgeVector> cache_;
};

/// The triplet-network matcher: score = exp(-embedding distance).
class EmbeddingScorer final : public Scorer {
public:
  explicit EmbeddingScorer(std::shared_ptr<const EmbeddingModel> model) : model_(std::move(model)) {}
  std::string name() const override { return "wisepanda"; }
  void prepare(const DatasetManifest& dataset) override;
  double score(const Fragment& target, const Fragment& candidate) const override;

private:
  Embedding embedding_of(const Fragment& f) const;
  std::shared_ptr<const EmbeddingModel> model_;
  std::unordered_map<std::string, Embedding> cache_;
};

/// Cosine similarity of edge vectors; a flat (all-zero) edge scores 0.
class CosineScorer final : public Scorer {
public:
  std::string name() const override { return "cosine"; }
  void prepare(const DatasetManifest& dataset) override { cache_.fill(dataset); }
  double score(const Fragment& target, const Fragment& candidate) const override;
  double confidence(double score) const override { return 0.5 * (1.0 + score); }

private:
  EdgeVectorCache cache_;
};

/// Negated DTW distance of edge vectors.
class DtwScorer final : public Scorer {
public:
  std::string name() const override { return "dtw"; }
  void prepare(const DatasetManifest& dataset) override { cache_.fill(dataset); }
  double score(const Fragment& target, const Fragment& candidate) const override;
  /// exp of the negated mean per-sample cost.
  double confidence(double score) const override;

private:
  EdgeVectorCache cache_;
};

/// Uninformed search. Each (target, candidate) score is an independent
/// uniform draw keyed by the seed and both ids, so results do not depend on
/// call order.
class RandomScorer final : public Scorer {
public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  double score(const Fragment& target, const Fragment& candidate) const override;

private:
  std::uint64_t seed_;
};

/// Scores 1 for the recorded true match and 0 otherwise.
class GroundTruthScorer final : public Scorer {
public:
  std::string name() const override { return "oracle"; }
  void prepare(const DatasetManifest& dataset) override;
  double score(const Fragment& target, const Fragment& candidate) const override;

private:
  std::unordered_map<std::string, std::string> match_;
};

/// Adapts a plain callable; handy for tests and ad-hoc matchers.
class FunctionScorer final : public Scorer {
public:
  using Fn = std::function<double(const Fragment&, const Fragment&)>;
  FunctionScorer(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  double score(const Fragment& t, const Fragment& c) const override { return fn_(t, c); }

private:
  std::string name_;
  Fn fn_;
};

/// Builds a scorer by method name: wisepanda, dtw, cosine, random, oracle.
/// wisepanda requires a model. Throws InputError for unknown names.
std::unique_ptr<Scorer> make_scorer(const std::string& method, std::shared_ptr<const EmbeddingModel> model,
                                    std::uint64_t seed = 0);

}  // namespace slipforge
