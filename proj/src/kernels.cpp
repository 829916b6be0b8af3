#include "slipforge/kernels.hpp"

#include "slipforge/error.hpp"

namespace slipforge::kernels {

namespace {

// Score of the truth itself is taken from the pool entry that is the truth,
// so ties against it resolve purely by id.
std::size_t rank_one(const Scorer& scorer, const RankQuery& q, std::vector<double>& scratch) {
  scratch.resize(q.pool.size());
  serial::score_pool(scorer, *q.target, q.pool, scratch);
  for (std::size_t i = 0; i < q.pool.size(); ++i) {
    if (q.pool[i] == q.truth || q.pool[i]->id == q.truth->id)
      return rank_from_scores(scratch, q.pool, scratch[i], q.truth->id);
  }
  throw InputError("true match " + q.truth->id + " is not in the candidate pool");
}

}  // namespace

std::size_t rank_from_scores(std::span<const double> scores, std::span<const Fragment* const> pool,
                             double truth_score, const std::string& truth_id) {
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > truth_score || (scores[i] == truth_score && pool[i]->id < truth_id)) ++ahead;
  }
  return ahead + 1;
}

void score_pool(const Scorer& scorer, const Fragment& target, std::span<const Fragment* const> pool,
                std::span<double> out) {
  const long long n = static_cast<long long>(pool.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) out[i] = scorer.score(target, *pool[i]);
}

std::vector<std::size_t> ranks_of_truth(const Scorer& scorer, std::span<const RankQuery> queries) {
  std::vector<std::size_t> ranks(queries.size());
  const long long n = static_cast<long long>(queries.size());
  bool failed = false;
  std::string failure;
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 4)
    for (long long q = 0; q < n; ++q) {
      try {
        ranks[q] = rank_one(scorer, queries[q], scratch);
      } catch (const std::exception& e) {
#pragma omp critical(slipforge_rank_failure)
        {
          if (!failed) {
            failed = true;
            failure = e.what();
          }
        }
      }
    }
  }
  if (failed) throw InputError(failure);
  return ranks;
}

std::vector<double> score_matrix(const Scorer& scorer, std::span<const Fragment* const> rows,
                                 std::span<const Fragment* const> cols) {
  std::vector<double> m(rows.size() * cols.size());
  const long long n = static_cast<long long>(m.size());
  const std::size_t width = cols.size();
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < n; ++k) {
    const std::size_t r = static_cast<std::size_t>(k) / width;
    const std::size_t c = static_cast<std::size_t>(k) % width;
    m[k] = scorer.score(*rows[r], *cols[c]);
  }
  return m;
}

std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& fn) {
  std::vector<double> out(n);
  bool failed = false;
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      out[i] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(slipforge_map_failure)
      {
        if (!failed) {
          failed = true;
          error = std::current_exception();
        }
      }
    }
  }
  if (failed) std::rethrow_exception(error);
  return out;
}

namespace serial {

void score_pool(const Scorer& scorer, const Fragment& target, std::span<const Fragment* const> pool,
                std::span<double> out) {
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = scorer.score(target, *pool[i]);
}

std::vector<std::size_t> ranks_of_truth(const Scorer& scorer, std::span<const RankQuery> queries) {
  std::vector<std::size_t> ranks;
  ranks.reserve(queries.size());
  std::vector<double> scratch;
  for (const auto& q : queries) ranks.push_back(rank_one(scorer, q, scratch));
  return ranks;
}

std::vector<double> score_matrix(const Scorer& scorer, std::span<const Fragment* const> rows,
                                 std::span<const Fragment* const> cols) {
  std::vector<double> m;
  m.reserve(rows.size() * cols.size());
  for (const Fragment* r : rows)
    for (const Fragment* c : cols) m.push_back(scorer.score(*r, *c));
  return m;
}

std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& fn) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

}  // namespace serial
}  // namespace slipforge::kernels
