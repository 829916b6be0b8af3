#include "slipforge/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slipforge/error.hpp"
#include "slipforge/kernels.hpp"
#include "slipforge/rng.hpp"

namespace slipforge {

const std::array<GeneBounds, kGeneCount>& gene_bounds() {
  static const std::array<GeneBounds, kGeneCount> bounds{{
      {0.2, 1.45},   // theta_max
      {0.05, 1.0},   // sigma_theta
      {0.0, 0.95},   // rho
      {0.0, 0.3},    // beta
      {0.0, 0.1},    // base_rate
      {0.0, 0.4},    // exposure_rate; above 0.5 a spike would overshoot
      {0.0, 40.0},   // corrosion_steps
  }};
  return bounds;
}

const std::array<std::string_view, kGeneCount>& gene_names() {
  static const std::array<std::string_view, kGeneCount> names{
      "theta_max", "sigma_theta", "rho", "beta", "base_rate", "exposure_rate", "corrosion_steps"};
  return names;
}

bool Genome::within_bounds() const {
  const auto& b = gene_bounds();
  for (std::size_t i = 0; i < kGeneCount; ++i)
    if (!(genes[i] >= b[i].lo && genes[i] <= b[i].hi)) return false;
  return true;
}

PhysicsParams decode(const Genome& g, const PhysicsParams& base) {
  PhysicsParams p = base;
  p.theta_max = g.genes[0];
  p.sigma_theta = g.genes[1];
  p.rho = g.genes[2];
  p.beta = g.genes[3];
  p.base_rate = g.genes[4];
  p.exposure_rate = g.genes[5];
  p.corrosion_steps = static_cast<int>(std::lround(g.genes[6]));
  return p;
}

Genome encode(const PhysicsParams& p) {
  return Genome{{p.theta_max, p.sigma_theta, p.rho, p.beta, p.base_rate, p.exposure_rate,
                 static_cast<double>(p.corrosion_steps)}};
}

std::vector<EdgeVector> sample_edges(const PhysicsParams& params, std::size_t count, std::uint64_t seed) {
  std::vector<EdgeVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const FragmentPair pair = generate_pair(params, derive_seed(seed, i));
    if (i % 2 == 0) {
      out.push_back(extract_edge_vector(pair.lower_edge, EdgeRole::lower_top));
    } else {
      out.push_back(extract_edge_vector(pair.upper_edge, EdgeRole::upper_bottom));
    }
  }
  return out;
}

ReferenceSet make_reference(const PhysicsParams& hidden, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InputError("reference set must be nonempty");
  return ReferenceSet{sample_edges(hidden, count, seed)};
}

ReferenceSet reference_from_manifest(const DatasetManifest& dataset) {
  ReferenceSet ref;
  for (const auto& f : dataset.fragments) {
    ref.edges.push_back(extract_edge_vector(
        f.edge, f.group == Group::upper ? EdgeRole::upper_bottom : EdgeRole::lower_top, f.id));
  }
  if (ref.edges.empty()) throw InputError("reference manifest has no fragments");
  return ref;
}

namespace {

using Matrix = std::vector<double>;  // kEdgeDim x kEdgeDim, row-major
constexpr std::size_t D = kEdgeDim;

Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c(D * D, 0.0);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t k = 0; k < D; ++k) {
      const double aik = a[i * D + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < D; ++j) c[i * D + j] += aik * b[k * D + j];
    }
  return c;
}

void scale_to_unit(Matrix& m) {
  double f = 0.0;
  for (double v : m) f += v * v;
  f = std::sqrt(f);
  if (f > 0.0)
    for (double& v : m) v /= f;
}

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < D; ++j) s += m[i * D + j] * v[j];
    out[i] = s;
  }
  return out;
}

double normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0)
    for (double& x : v) x /= n;
  return n;
}

// Leading eigenpair of a symmetric PSD matrix. Iterates on cov^8 (three
// squarings) so that 200 sweeps converge even for close eigenvalues; the
// eigenvalue is the Rayleigh quotient on cov itself.
std::pair<double, std::vector<double>> leading_eigenpair(const Matrix& cov, std::vector<double> v) {
  Matrix m = cov;
  scale_to_unit(m);
  for (int s = 0; s < 3; ++s) {
    m = multiply(m, m);
    scale_to_unit(m);
  }
  normalize(v);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> next = mat_vec(m, v);
    if (normalize(next) == 0.0) return {0.0, v};
    double diff = 0.0;
    for (std::size_t i = 0; i < D; ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
    v = std::move(next);
    if (diff < 1e-9) break;
  }
  // Fix the sign so the largest component is positive.
  const auto big = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*big < 0)
    for (double& x : v) x = -x;
  const std::vector<double> cv = mat_vec(cov, v);
  const double lambda = std::inner_product(v.begin(), v.end(), cv.begin(), 0.0);
  return {lambda, v};
}

}  // namespace

std::vector<Point2> pca_2d(std::span<const EdgeVector> points) {
  if (points.size() < 3) throw InputError("pca_2d needs at least 3 points");
  const std::size_t n = points.size();
  std::array<double, D> mean{};
  for (const auto& p : points)
    for (std::size_t j = 0; j < D; ++j) mean[j] += p.values[j];
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix cov(D * D, 0.0);
  std::array<double, D> c{};
  for (const auto& p : points) {
    for (std::size_t j = 0; j < D; ++j) c[j] = p.values[j] - mean[j];
    for (std::size_t i = 0; i < D; ++i) {
      if (c[i] == 0.0) continue;
      for (std::size_t j = 0; j < D; ++j) cov[i * D + j] += c[i] * c[j];
    }
  }
  for (double& v : cov) v /= static_cast<double>(n - 1);

  double trace = 0.0;
  for (std::size_t i = 0; i < D; ++i) trace += cov[i * D + i];

  // Fixed start vector keeps the projection deterministic.
  std::vector<double> start(D);
  Rng rng(0x5eedULL);
  std::normal_distribution<double> normal;
  for (double& x : start) x = normal(rng);

  auto [l1, v1] = leading_eigenpair(cov, start);
  Matrix deflated = cov;
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < D; ++j) deflated[i * D + j] -= l1 * v1[i] * v1[j];
  auto [l2, v2] = leading_eigenpair(deflated, start);

  const double tol = 1e-12 * std::max(trace, 1e-300);
  if (!(trace > 0.0) || l1 <= tol || l2 <= tol)
    throw DegenerateInputError("points span fewer than two directions of variance");

  std::vector<Point2> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      const double x = points[k].values[j] - mean[j];
      a += x * v1[j];
      b += x * v2[j];
    }
    out[k] = {a, b};
  }
  return out;
}

namespace {

// Per-point silhouette values; validates labels.
std::vector<double> silhouette_values(std::span<const Point2> points, std::span<const int> labels,
                                      std::array<std::size_t, 2>& size) {
  if (points.size() != labels.size()) throw InputError("silhouette: points and labels differ in length");
  size = {0, 0};
  for (int l : labels) {
    if (l != 0 && l != 1) throw InputError("silhouette: labels must be 0 or 1");
    ++size[l];
  }
  if (size[0] < 2 || size[1] < 2) throw InputError("silhouette needs two clusters of at least two points");

  const std::size_t n = points.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 2> sum{};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += std::hypot(points[i][0] - points[j][0], points[i][1] - points[j][1]);
    }
    const int own = labels[i];
    const double a = sum[own] / static_cast<double>(size[own] - 1);
    const double b = sum[1 - own] / static_cast<double>(size[1 - own]);
    const double denom = std::max(a, b);
    s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return s;
}

}  // namespace

double silhouette(std::span<const Point2> points, std::span<const int> labels) {
  std::array<std::size_t, 2> size{};
  const auto s = silhouette_values(points, labels, size);
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

std::array<double, 2> silhouette_by_cluster(std::span<const Point2> points, std::span<const int> labels) {
  std::array<std::size_t, 2> size{};
  const auto s = silhouette_values(points, labels, size);
  std::array<double, 2> mean{};
  for (std::size_t i = 0; i < s.size(); ++i) mean[labels[i]] += s[i];
  return {mean[0] / static_cast<double>(size[0]), mean[1] / static_cast<double>(size[1])};
}

double fitness(const Genome& genome, const ReferenceSet& reference, std::size_t m_samples, std::uint64_t seed,
               const PhysicsParams& base) {
  if (m_samples < 3) throw InputError("fitness needs at least 3 generated samples");
  if (reference.edges.size() < 2) throw InputError("reference set needs at least 2 edges");
  const PhysicsParams params = decode(genome, base);
  std::vector<EdgeVector> pooled = sample_edges(params, m_samples, seed);
  std::vector<int> labels(pooled.size(), 0);
  pooled.insert(pooled.end(), reference.edges.begin(), reference.edges.end());
  labels.resize(pooled.size(), 1);
  const auto per_cluster = silhouette_by_cluster(pca_2d(pooled), labels);
  return std::max(std::abs(per_cluster[0]), std::abs(per_cluster[1]));
}

namespace {

Genome random_genome(Rng& rng) {
  Genome g;
  const auto& b = gene_bounds();
  for (std::size_t i = 0; i < kGeneCount; ++i) g.genes[i] = std::uniform_real_distribution<double>(b[i].lo, b[i].hi)(rng);
  return g;
}

void clamp_to_bounds(Genome& g) {
  const auto& b = gene_bounds();
  for (std::size_t i = 0; i < kGeneCount; ++i) g.genes[i] = std::clamp(g.genes[i], b[i].lo, b[i].hi);
}

std::size_t tournament(const std::vector<double>& fit, std::size_t k, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, fit.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t i = 1; i < k; ++i) {
    const std::size_t c = pick(rng);
    if (fit[c] < fit[best] || (fit[c] == fit[best] && c < best)) best = c;
  }
  return best;
}

// BLX-alpha with alpha = 0.5: each gene uniform on the parents' interval
// widened by half its length on both sides.
Genome blend_crossover(const Genome& a, const Genome& b, Rng& rng) {
  Genome child;
  for (std::size_t i = 0; i < kGeneCount; ++i) {
    const double lo = std::min(a.genes[i], b.genes[i]);
    const double hi = std::max(a.genes[i], b.genes[i]);
    const double d = hi - lo;
    child.genes[i] = d == 0.0 ? lo : std::uniform_real_distribution<double>(lo - 0.5 * d, hi + 0.5 * d)(rng);
  }
  clamp_to_bounds(child);
  return child;
}

void mutate(Genome& g, double sigma_fraction, double rate, Rng& rng) {
  const auto& b = gene_bounds();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < kGeneCount; ++i) {
    if (coin(rng) >= rate) continue;
    const double sigma = sigma_fraction * b[i].range();
    if (sigma > 0.0) g.genes[i] += std::normal_distribution<double>(0.0, sigma)(rng);
  }
  clamp_to_bounds(g);
}

std::vector<std::size_t> order_by_fitness(const std::vector<double>& fit) {
  std::vector<std::size_t> idx(fit.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
  return idx;
}

}  // namespace

CalibrationResult calibrate(const ReferenceSet& reference, const GaConfig& cfg) {
  if (cfg.pop_size < 4) throw InputError("pop_size must be >= 4");
  if (cfg.generations < 1) throw InputError("generations must be >= 1");
  if (cfg.tournament_k < 1) throw InputError("tournament_k must be >= 1");
  if (cfg.elitism >= cfg.pop_size) throw InputError("elitism must be smaller than pop_size");
  if (!(cfg.crossover_rate >= 0 && cfg.crossover_rate <= 1)) throw InputError("crossover_rate must lie in [0, 1]");
  if (!(cfg.mutation_rate >= 0 && cfg.mutation_rate <= 1)) throw InputError("mutation_rate must lie in [0, 1]");
  if (!(cfg.mutation_sigma >= 0)) throw InputError("mutation_sigma must be >= 0");
  if (!cfg.initial_population.empty() && cfg.initial_population.size() != cfg.pop_size)
    throw InputError("initial_population size must equal pop_size");
  if (reference.edges.empty()) throw InputError("empty reference set");

  const std::size_t m_samples = cfg.m_samples ? cfg.m_samples : reference.edges.size();
  // Every genome sees the same sample stream, so fitness differences reflect
  // the parameters rather than sampling noise.
  const std::uint64_t fitness_seed = derive_seed(cfg.seed, 0xf17e55ULL);
  Rng rng(cfg.seed);

  std::vector<Genome> pop = cfg.initial_population;
  if (pop.empty()) {
    for (std::size_t i = 0; i < cfg.pop_size; ++i) pop.push_back(random_genome(rng));
  }
  for (auto& g : pop) clamp_to_bounds(g);

  auto evaluate = [&](const std::vector<Genome>& genomes, std::size_t from) {
    return kernels::map_indexed(genomes.size() - from, [&](std::size_t i) {
      return fitness(genomes[from + i], reference, m_samples, fitness_seed, cfg.base);
    });
  };

  CalibrationResult result;
  std::vector<double> fit = evaluate(pop, 0);
  result.evaluations += fit.size();
  result.history.push_back(*std::min_element(fit.begin(), fit.end()));

  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    const auto ranked = order_by_fitness(fit);
    std::vector<Genome> next;
    std::vector<double> next_fit;
    for (std::size_t e = 0; e < cfg.elitism; ++e) {
      next.push_back(pop[ranked[e]]);
      next_fit.push_back(fit[ranked[e]]);
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    while (next.size() < cfg.pop_size) {
      const Genome& a = pop[tournament(fit, cfg.tournament_k, rng)];
      const Genome& b = pop[tournament(fit, cfg.tournament_k, rng)];
      Genome child = coin(rng) < cfg.crossover_rate ? blend_crossover(a, b, rng) : a;
      mutate(child, cfg.mutation_sigma, cfg.mutation_rate, rng);
      next.push_back(child);
    }
    const std::vector<double> fresh = evaluate(next, cfg.elitism);
    result.evaluations += fresh.size();
    next_fit.insert(next_fit.end(), fresh.begin(), fresh.end());
    pop = std::move(next);
    fit = std::move(next_fit);
    result.history.push_back(*std::min_element(fit.begin(), fit.end()));
  }

  const auto ranked = order_by_fitness(fit);
  result.best = pop[ranked.front()];
  result.best_fitness = fit[ranked.front()];
  result.final_population = std::move(pop);
  return result;
}

}  // namespace slipforge
