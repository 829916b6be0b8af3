// Serial vs OpenMP timings for the hot kernels.
//
//   bench_kernels [pairs] [interference] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "slipforge/calibration.hpp"
#include "slipforge/kernels.hpp"

using namespace slipforge;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-22s serial %9.4fs   openmp %9.4fs   speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t pairs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 118;
  const std::size_t interference = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 1114;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;
  std::printf("threads %d, %zu pairs + %zu interference, best of %d\n", omp_get_max_threads(), pairs, interference,
              repeats);

  const auto data = generate_dataset(PhysicsParams{}, pairs, interference, 1);
  std::vector<const Fragment*> uppers, lowers;
  for (const auto& f : data.fragments) (f.group == Group::upper ? uppers : lowers).push_back(&f);
  const DatasetIndex index(data);
  std::vector<kernels::RankQuery> queries;
  for (const auto& gt : data.ground_truth) {
    queries.push_back({&index.at(gt.upper_id), &index.at(gt.lower_id), lowers});
    queries.push_back({&index.at(gt.lower_id), &index.at(gt.upper_id), uppers});
  }

  auto model = std::make_shared<const EmbeddingModel>(EmbeddingModel::initialize(0));
  EmbeddingScorer wise(model);
  DtwScorer dtw;
  wise.prepare(data);
  dtw.prepare(data);

  std::vector<double> out(lowers.size());
  report("score_pool/dtw",
         best_of(repeats, [&] { for (const auto* u : uppers) kernels::serial::score_pool(dtw, *u, lowers, out); }),
         best_of(repeats, [&] { for (const auto* u : uppers) kernels::score_pool(dtw, *u, lowers, out); }));
  report("ranks_of_truth/dtw", best_of(repeats, [&] { kernels::serial::ranks_of_truth(dtw, queries); }),
         best_of(repeats, [&] { kernels::ranks_of_truth(dtw, queries); }));
  report("ranks_of_truth/embed", best_of(repeats, [&] { kernels::serial::ranks_of_truth(wise, queries); }),
         best_of(repeats, [&] { kernels::ranks_of_truth(wise, queries); }));
  report("score_matrix/dtw", best_of(repeats, [&] { kernels::serial::score_matrix(dtw, uppers, lowers); }),
         best_of(repeats, [&] { kernels::score_matrix(dtw, uppers, lowers); }));

  const auto reference = make_reference(PhysicsParams{}, 200, 3);
  std::vector<Genome> population;
  Rng rng(4);
  for (int i = 0; i < 24; ++i) {
    Genome g;
    for (std::size_t k = 0; k < kGeneCount; ++k) {
      const auto& b = gene_bounds()[k];
      g.genes[k] = b.lo + to_unit(rng()) * b.range();
    }
    population.push_back(g);
  }
  const auto fit = [&](std::size_t i) { return fitness(population[i], reference, 200, 9); };
  report("population fitness", best_of(1, [&] { kernels::serial::map_indexed(population.size(), fit); }),
         best_of(1, [&] { kernels::map_indexed(population.size(), fit); }));
}
