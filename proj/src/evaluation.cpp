#include "slipforge/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "slipforge/error.hpp"
#include "slipforge/kernels.hpp"

namespace slipforge {

RankedList rank_candidates(const Fragment& target, std::span<const Fragment* const> pool, const Scorer& scorer,
                           const std::optional<std::string>& truth_id) {
  if (pool.empty()) throw InputError("empty candidate pool");
  for (const Fragment* c : pool) {
    if (c->group == target.group)
      throw ProtocolError("candidate " + c->id + " is in the same group as target " + target.id);
  }
  std::vector<double> scores(pool.size());
  kernels::score_pool(scorer, target, pool, scores);

  RankedList list;
  list.target_id = target.id;
  list.entries.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    list.entries.push_back({pool[i]->id, scores[i], scorer.confidence(scores[i])});
  std::sort(list.entries.begin(), list.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.candidate_id < b.candidate_id;
  });
  if (truth_id) {
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      if (list.entries[i].candidate_id == *truth_id) {
        list.rank_of_truth = i + 1;
        break;
      }
    }
  }
  return list;
}

double TopKReport::at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return accuracy[i];
  throw InputError("k=" + std::to_string(k) + " not in report");
}

namespace {

struct QueryPlan {
  std::vector<const Fragment*> uppers;
  std::vector<const Fragment*> lowers;
  std::vector<kernels::RankQuery> queries;
};

QueryPlan plan_queries(const DatasetManifest& dataset, const DatasetIndex& index) {
  if (dataset.ground_truth.empty()) throw InputError("dataset has no ground-truth pairs");
  QueryPlan plan;
  for (const auto& f : dataset.fragments) (f.group == Group::upper ? plan.uppers : plan.lowers).push_back(&f);
  for (const auto& gt : dataset.ground_truth)
    plan.queries.push_back({&index.at(gt.upper_id), &index.at(gt.lower_id), plan.lowers});
  for (const auto& gt : dataset.ground_truth)
    plan.queries.push_back({&index.at(gt.lower_id), &index.at(gt.upper_id), plan.uppers});
  return plan;
}

TopKReport assemble(const Scorer& scorer, std::span<const int> ks, std::string dataset_name,
                    const QueryPlan& plan, std::vector<std::size_t> ranks) {
  TopKReport r;
  r.method = scorer.name();
  r.dataset = std::move(dataset_name);
  r.ks.assign(ks.begin(), ks.end());
  r.pool_upper_to_lower = plan.lowers.size();
  r.pool_lower_to_upper = plan.uppers.size();
  r.queries = ranks.size();
  for (int k : ks) {
    if (k < 1) throw InputError("k must be >= 1");
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t rank) { return rank <= static_cast<std::size_t>(k); });
    r.accuracy.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size()));
  }
  r.ranks = std::move(ranks);
  return r;
}

}  // namespace

TopKReport evaluate_topk_prepared(const DatasetManifest& dataset, const Scorer& scorer, std::span<const int> ks,
                                  std::string dataset_name) {
  const DatasetIndex index(dataset);
  const QueryPlan plan = plan_queries(dataset, index);
  return assemble(scorer, ks, std::move(dataset_name), plan, kernels::ranks_of_truth(scorer, plan.queries));
}

TopKReport evaluate_topk_serial(const DatasetManifest& dataset, const Scorer& scorer, std::span<const int> ks,
                                std::string dataset_name) {
  const DatasetIndex index(dataset);
  const QueryPlan plan = plan_queries(dataset, index);
  return assemble(scorer, ks, std::move(dataset_name), plan, kernels::serial::ranks_of_truth(scorer, plan.queries));
}

TopKReport evaluate_topk(const DatasetManifest& dataset, Scorer& scorer, std::span<const int> ks,
                         std::string dataset_name) {
  scorer.prepare(dataset);
  return evaluate_topk_prepared(dataset, scorer, ks, std::move(dataset_name));
}

double SimilarityMatrix::contrast() const {
  const std::size_t n = size();
  if (n < 2) throw InputError("contrast needs at least 2 pairs");
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) (i == j ? diag : off) += (*this)(i, j);
  }
  return diag / static_cast<double>(n) - off / static_cast<double>(n * (n - 1));
}

SimilarityMatrix similarity_matrix(const DatasetManifest& dataset, Scorer& scorer) {
  scorer.prepare(dataset);
  const DatasetIndex index(dataset);
  std::vector<const Fragment*> rows, cols;
  SimilarityMatrix m;
  for (const auto& gt : dataset.ground_truth) {
    rows.push_back(&index.at(gt.upper_id));
    cols.push_back(&index.at(gt.lower_id));
    m.row_ids.push_back(gt.upper_id);
    m.col_ids.push_back(gt.lower_id);
  }
  m.values = kernels::score_matrix(scorer, rows, cols);
  return m;
}

DatasetManifest with_interference(const DatasetManifest& dataset, std::size_t count) {
  std::unordered_set<std::string> paired;
  for (const auto& gt : dataset.ground_truth) {
    paired.insert(gt.upper_id);
    paired.insert(gt.lower_id);
  }
  DatasetManifest out;
  out.format_version = dataset.format_version;
  out.ground_truth = dataset.ground_truth;
  out.params = dataset.params;
  out.seed = dataset.seed;
  std::size_t taken = 0;
  for (const auto& f : dataset.fragments) {
    if (paired.count(f.id)) {
      out.fragments.push_back(f);
    } else if (taken < count) {
      out.fragments.push_back(f);
      ++taken;
    }
  }
  if (taken < count)
    throw InputError("requested " + std::to_string(count) + " interference fragments, only " +
                     std::to_string(taken) + " available");
  return out;
}

std::vector<TopKReport> interference_sweep(const DatasetManifest& dataset, std::span<const std::size_t> counts,
                                           Scorer& scorer, std::span<const int> ks, const std::string& dataset_name) {
  if (!std::is_sorted(counts.begin(), counts.end())) throw InputError("interference counts must be non-decreasing");
  scorer.prepare(dataset);
  std::vector<TopKReport> reports;
  for (std::size_t count : counts) {
    const DatasetManifest subset = with_interference(dataset, count);
    reports.push_back(evaluate_topk_prepared(subset, scorer, ks, dataset_name));
    reports.back().interference = count;
  }
  return reports;
}

std::string format_table(std::span<const TopKReport> reports) {
  std::string out;
  char buf[64];
  out += "method       dataset          interf";
  if (!reports.empty()) {
    for (int k : reports.front().ks) {
      std::snprintf(buf, sizeof buf, "   top-%-4d", k);
      out += buf;
    }
  }
  out += '\n';
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-12s %-16s %6zu", r.method.c_str(), r.dataset.c_str(), r.interference);
    out += buf;
    for (double a : r.accuracy) {
      std::snprintf(buf, sizeof buf, "   %7.2f%%", a);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace slipforge
