#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "slipforge/dataset.hpp"
#include "slipforge/features.hpp"
#include "slipforge/physics.hpp"

namespace slipforge {

inline constexpr std::size_t kGeneCount = 7;

struct GeneBounds {
  double lo;
  double hi;
  double range() const { return hi - lo; }
};

/// Gene order: theta_max, sigma_theta, rho, beta, base_rate, exposure_rate,
/// corrosion_steps.
const std::array<GeneBounds, kGeneCount>& gene_bounds();
const std::array<std::string_view, kGeneCount>& gene_names();

struct Genome {
  std::array<double, kGeneCount> genes{};

  bool within_bounds() const;
  friend bool operator==(const Genome&, const Genome&) = default;
};

/// Copies the genes into `base` (which supplies n_fibers, fiber_width and
/// seed); corrosion_steps is rounded to the nearest integer.
PhysicsParams decode(const Genome& genome, const PhysicsParams& base = {});
Genome encode(const PhysicsParams& params);

struct ReferenceSet {
  std::vector<EdgeVector> edges;
};

/// Edge vectors of `count` generated fragments; sample i comes from pair
/// derive_seed(seed, i) and alternates lower (even i) and upper (odd i) edges.
std::vector<EdgeVector> sample_edges(const PhysicsParams& params, std::size_t count, std::uint64_t seed);

/// Synthetic stand-in for a measured reference set, drawn from known params.
ReferenceSet make_reference(const PhysicsParams& hidden, std::size_t count = 200, std::uint64_t seed = 0);

/// Every fragment edge in the manifest. Throws InputError if empty.
ReferenceSet reference_from_manifest(const DatasetManifest& dataset);

using Point2 = std::array<double, 2>;

/// Projection of mean-centered points onto the two leading principal axes.
/// Throws InputError for fewer than 3 points, DegenerateInputError when the
/// data has fewer than two directions of nonzero variance.
std::vector<Point2> pca_2d(std::span<const EdgeVector> points);

/// Mean silhouette coefficient with Euclidean distance. labels are 0/1; each
/// label needs at least two points.
double silhouette(std::span<const Point2> points, std::span<const int> labels);

/// Mean silhouette of the points carrying each label: {label 0, label 1}.
std::array<double, 2> silhouette_by_cluster(std::span<const Point2> points, std::span<const int> labels);

/// Generated (label 0) vs reference (label 1) edges, projected together onto
/// their joint PCA plane; returns the larger |mean silhouette| of the two
/// clusters. 0 means the sets are indistinguishable. A narrow cluster nested
/// inside a wide one scores high here even though its overall mean
/// silhouette can be near 0.
double fitness(const Genome& genome, const ReferenceSet& reference, std::size_t m_samples,
               std::uint64_t seed, const PhysicsParams& base = {});

struct GaConfig {
  std::size_t pop_size = 24;
  std::size_t generations = 30;
  std::size_t tournament_k = 3;
  double crossover_rate = 0.9;
  double mutation_sigma = 0.1;  // fraction of each gene's range
  double mutation_rate = 0.2;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;
  std::size_t m_samples = 0;  // 0: match the reference size
  PhysicsParams base;         // non-genome fields
  std::vector<Genome> initial_population;  // empty: uniform within bounds
};

struct CalibrationResult {
  Genome best;
  double best_fitness = 0.0;
  std::vector<double> history;  // best fitness after init, then per generation
  std::size_t evaluations = 0;
  std::vector<Genome> final_population;
};

CalibrationResult calibrate(const ReferenceSet& reference, const GaConfig& config);

}  // namespace slipforge
