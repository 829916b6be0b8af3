#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a plain serial twin in
// `serial::` that the tests use as the reference; the two must agree
// bit-for-bit because each output slot is computed independently.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "slipforge/dataset.hpp"
#include "slipforge/scorer.hpp"

namespace slipforge::kernels {

/// out[i] = scorer.score(target, *pool[i]).
void score_pool(const Scorer& scorer, const Fragment& target, std::span<const Fragment* const> pool,
                std::span<double> out);

/// One ranking query: where does `truth` land among `pool`?
struct RankQuery {
  const Fragment* target = nullptr;
  const Fragment* truth = nullptr;
  std::span<const Fragment* const> pool;
};

/// 1-based rank of each query's truth under descending score, ties broken by
/// ascending candidate id. Equivalent to a full sort, without sorting.
std::vector<std::size_t> ranks_of_truth(const Scorer& scorer, std::span<const RankQuery> queries);

/// Row-major rows.size() x cols.size() matrix of scorer.score(row, col).
std::vector<double> score_matrix(const Scorer& scorer, std::span<const Fragment* const> rows,
                                 std::span<const Fragment* const> cols);

/// out[i] = fn(i), evaluated in parallel. fn must be thread-safe.
std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& fn);

namespace serial {
void score_pool(const Scorer& scorer, const Fragment& target, std::span<const Fragment* const> pool,
                std::span<double> out);
std::vector<std::size_t> ranks_of_truth(const Scorer& scorer, std::span<const RankQuery> queries);
std::vector<double> score_matrix(const Scorer& scorer, std::span<const Fragment* const> rows,
                                 std::span<const Fragment* const> cols);
std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& fn);
}  // namespace serial

/// Rank of `truth_score` (belonging to `truth_id`) among `scores`.
std::size_t rank_from_scores(std::span<const double> scores, std::span<const Fragment* const> pool,
                             double truth_score, const std::string& truth_id);

}  // namespace slipforge::kernels
