#pragma once

#include <span>

#include "slipforge/features.hpp"
#include "slipforge/rng.hpp"

namespace slipforge {

/// Inner-product cosine. Throws InputError if either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
inline double cosine_similarity(const EdgeVector& a, const EdgeVector& b) {
  return cosine_similarity(a.view(), b.view());
}

/// Unconstrained DTW with |a_i - b_j| local cost; both endpoints matched.
/// Throws InputError on empty input.
double dtw_distance(std::span<const double> a, std::span<const double> b);

/// A score that ignores its inputs: uniform in (0, 1).
double random_scorer(const EdgeVector& a, const EdgeVector& b, Rng& rng);

}  // namespace slipforge
