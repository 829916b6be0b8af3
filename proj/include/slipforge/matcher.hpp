#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slipforge/dataset.hpp"
#include "slipforge/features.hpp"

namespace slipforge {

/// Fully connected layer, weights stored row-major as out x in.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct TrainingMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // mean triplet loss per epoch
  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

inline const std::vector<std::size_t> kDefaultLayerDims{64, 128, 64, 32};
inline constexpr double kDefaultMargin = 0.2;

/// Triplet network: tanh hidden layers, linear output, L2-normalized.
struct EmbeddingModel {
  std::vector<std::size_t> layer_dims = kDefaultLayerDims;
  std::vector<DenseLayer> layers;
  double margin = kDefaultMargin;
  TrainingMeta training_meta;

  /// Glorot-uniform weights, zero biases.
  static EmbeddingModel initialize(std::uint64_t seed,
                                   std::vector<std::size_t> dims = kDefaultLayerDims,
                                   double margin = kDefaultMargin);

  /// Throws ModelError when layers disagree with layer_dims.
  void validate() const;
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t embedding_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;

  /// Flat view over every parameter in layer order (weights, then bias).
  double& parameter(std::size_t flat_index);
  double parameter(std::size_t flat_index) const;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

using Embedding = std::vector<double>;

Embedding embed(const EmbeddingModel& model, std::span<const double> input);
inline Embedding embed(const EmbeddingModel& model, const EdgeVector& v) {
  return embed(model, v.view());
}

struct TripletBatch {
  std::vector<EdgeVector> anchors;
  std::vector<EdgeVector> positives;
  std::vector<EdgeVector> negatives;

  std::size_t size() const noexcept { return anchors.size(); }
  void validate() const;  // throws InputError
};

/// Mean over the batch of max(0, |a-p|^2 - |a-n|^2 + margin).
double triplet_loss(const EmbeddingModel& model, const TripletBatch& batch);

/// Same loss evaluated in extended precision; used by the finite-difference check.
long double triplet_loss_extended(const EmbeddingModel& model, const TripletBatch& batch);

/// Analytic gradient of triplet_loss with respect to every parameter, in the
/// flat order of EmbeddingModel::parameter. Returns the loss.
double triplet_loss_gradient(const EmbeddingModel& model, const TripletBatch& batch,
                             std::vector<double>& gradient);

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 1e-3;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

/// Adam on the triplet loss. Anchors alternate randomly between the upper and
/// lower side of each ground-truth pair; negatives are drawn uniformly from
/// the anchor's opposite group, excluding the true match, fresh each epoch.
EmbeddingModel train(EmbeddingModel model, const DatasetManifest& dataset, const TrainConfig& config);

/// exp(-distance) between two embeddings; 1 when they coincide.
double confidence_from_distance(double distance);
double embedding_distance(std::span<const double> a, std::span<const double> b);
double score_pair(const EmbeddingModel& model, const EdgeVector& a, const EdgeVector& b);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  std::size_t triplets_excluded = 0;  // sitting on the hinge kink
};

/// Central differences (h = 1e-5) against the analytic gradient. Triplets
/// whose hinge argument is within kink_tolerance of zero are dropped first.
GradientCheckResult gradient_check(const EmbeddingModel& model, const TripletBatch& batch,
                                   double step = 1e-5, double kink_tolerance = 1e-4);

}  // namespace slipforge
