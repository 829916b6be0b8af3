#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slipforge/dataset.hpp"
#include "slipforge/scorer.hpp"

namespace slipforge {

inline const std::vector<int> kDefaultKs{1, 5, 10, 20, 50, 100};

struct RankedEntry {
  std::string candidate_id;
  double score = 0.0;
  double confidence = 0.0;
};

struct RankedList {
  std::string target_id;
  std::vector<RankedEntry> entries;  // score descending, then id ascending
  std::optional<std::size_t> rank_of_truth;
};

/// Scores `target` against every pool member and sorts. Throws ProtocolError
/// if a pool member shares the target's group, InputError on an empty pool.
RankedList rank_candidates(const Fragment& target, std::span<const Fragment* const> pool,
                           const Scorer& scorer, const std::optional<std::string>& truth_id = std::nullopt);

struct TopKReport {
  std::string method;
  std::string dataset;
  std::vector<int> ks;
  std::vector<double> accuracy;  // percent, aligned with ks
  std::size_t pool_upper_to_lower = 0;
  std::size_t pool_lower_to_upper = 0;
  std::size_t queries = 0;
  std::size_t interference = 0;
  std::vector<std::size_t> ranks;  // per query, upper->lower block first

  double at(int k) const;  // throws InputError if k was not evaluated
};

/// Ranks every ground-truth fragment against the whole opposite group, in
/// both directions, and reports the share of queries whose true match lands
/// within the first k. Scorer::prepare is called on the dataset first.
TopKReport evaluate_topk(const DatasetManifest& dataset, Scorer& scorer, std::span<const int> ks,
                         std::string dataset_name = "dataset");

/// Same protocol with precomputed scorer state; only `prepare`-free work.
TopKReport evaluate_topk_prepared(const DatasetManifest& dataset, const Scorer& scorer,
                                  std::span<const int> ks, std::string dataset_name = "dataset");

/// Sequential reference of evaluate_topk_prepared.
TopKReport evaluate_topk_serial(const DatasetManifest& dataset, const Scorer& scorer,
                                std::span<const int> ks, std::string dataset_name = "dataset");

struct SimilarityMatrix {
  std::vector<std::string> row_ids;  // upper fragment of ground-truth pair i
  std::vector<std::string> col_ids;  // lower fragment of ground-truth pair j
  std::vector<double> values;        // row-major

  std::size_t size() const noexcept { return row_ids.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * col_ids.size() + j]; }
  /// mean(diagonal) - mean(off-diagonal).
  double contrast() const;
};

SimilarityMatrix similarity_matrix(const DatasetManifest& dataset, Scorer& scorer);

/// Keeps the ground-truth fragments and the first `count` non-paired
/// fragments (file order). Throws InputError if fewer are available.
DatasetManifest with_interference(const DatasetManifest& dataset, std::size_t count);

/// Re-runs evaluate_topk as interference fragments are added. counts must be
/// non-decreasing.
std::vector<TopKReport> interference_sweep(const DatasetManifest& dataset, std::span<const std::size_t> counts,
                                           Scorer& scorer, std::span<const int> ks,
                                           const std::string& dataset_name = "dataset");

/// Fixed-width text table, one row per report.
std::string format_table(std::span<const TopKReport> reports);

}  // namespace slipforge
