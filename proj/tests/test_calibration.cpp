#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "slipforge/calibration.hpp"
#include "slipforge/error.hpp"

using namespace slipforge;

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

EdgeVector from(const Eigen::VectorXd& v) {
  EdgeVector e;
  for (std::size_t i = 0; i < kEdgeDim; ++i) e.values[i] = v[static_cast<Eigen::Index>(i)];
  return e;
}

// Reference projection from a dense symmetric eigensolver.
std::vector<Point2> eigen_pca(const std::vector<EdgeVector>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd X(n, kEdgeDim);
  for (Eigen::Index r = 0; r < n; ++r)
    for (std::size_t c = 0; c < kEdgeDim; ++c) X(r, static_cast<Eigen::Index>(c)) = pts[r].values[c];
  X.rowwise() -= X.colwise().mean();
  const Eigen::MatrixXd C = X.transpose() * X / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const auto& V = es.eigenvectors();  // ascending eigenvalues
  std::vector<Point2> out;
  for (Eigen::Index r = 0; r < n; ++r)
    out.push_back({X.row(r).dot(V.col(kEdgeDim - 1)), X.row(r).dot(V.col(kEdgeDim - 2))});
  return out;
}

PhysicsParams hidden_params() {
  PhysicsParams p;
  p.theta_max = 0.9;
  p.sigma_theta = 0.4;
  p.rho = 0.5;
  p.beta = 0.1;
  p.base_rate = 0.03;
  p.exposure_rate = 0.25;
  p.corrosion_steps = 15;
  return p;
}

}  // namespace

TEST_CASE("genome encoding") {
  const auto p = hidden_params();
  const Genome g = encode(p);
  CHECK(g.within_bounds());
  CHECK(decode(g) == p);
  Genome frac = g;
  frac.genes[6] = 14.6;
  CHECK(decode(frac).corrosion_steps == 15);
  Genome out = g;
  out.genes[0] = 2.0;
  CHECK_FALSE(out.within_bounds());
  CHECK(gene_names()[2] == "rho");
}

TEST_CASE("pca_2d") {
  SUBCASE("points already in a plane keep their distances") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(kEdgeDim), v = Eigen::VectorXd::Zero(kEdgeDim);
    u[0] = 1.0;
    u[1] = -1.0;
    v[2] = 1.0;
    v[3] = 1.0;
    v[4] = -2.0;
    u.normalize();
    v.normalize();
    Rng rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<EdgeVector> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(from(3.0 * n(rng) * u + n(rng) * v));
    const auto proj = pca_2d(pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        double d = 0;
        for (std::size_t k = 0; k < kEdgeDim; ++k) d += std::pow(pts[i].values[k] - pts[j].values[k], 2);
        REQUIRE(dist(proj[i], proj[j]) == doctest::Approx(std::sqrt(d)).epsilon(1e-8));
      }
  }
  SUBCASE("agrees with a dense eigensolver") {
    Rng rng(10);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<EdgeVector> pts;
    for (int i = 0; i < 10; ++i) {
      EdgeVector e;
      for (auto& x : e.values) x = n(rng);
      pts.push_back(e);
    }
    const auto got = pca_2d(pts);
    const auto want = eigen_pca(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      // axes are sign-ambiguous, so compare magnitudes and distances
      CHECK(std::abs(got[i][0]) == doctest::Approx(std::abs(want[i][0])).epsilon(1e-6));
      CHECK(std::abs(got[i][1]) == doctest::Approx(std::abs(want[i][1])).epsilon(1e-6));
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        REQUIRE(std::abs(dist(got[i], got[j]) - dist(want[i], want[j])) < 1e-6);
    }
  }
  SUBCASE("degenerate inputs") {
    std::vector<EdgeVector> two(2);
    CHECK_THROWS_AS(pca_2d(two), InputError);
    std::vector<EdgeVector> same(5);
    CHECK_THROWS_AS(pca_2d(same), DegenerateInputError);
    std::vector<EdgeVector> line(5);
    for (int i = 0; i < 5; ++i) line[i].values[0] = i;
    CHECK_THROWS_AS(pca_2d(line), DegenerateInputError);
  }
}

TEST_CASE("silhouette") {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {10, 0}, {11, 0}};
  const std::vector<int> labels{0, 0, 1, 1};
  const double want = (9.5 / 10.5 + 8.5 / 9.5) / 2.0;
  CHECK(silhouette(pts, labels) == doctest::Approx(want).epsilon(1e-12));
  const auto by = silhouette_by_cluster(pts, labels);
  CHECK(by[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(by[1] == doctest::Approx(want).epsilon(1e-12));

  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Point2> mixed;
  std::vector<int> mixed_labels;
  for (int i = 0; i < 400; ++i) {
    mixed.push_back({n(rng), n(rng)});
    mixed_labels.push_back(i % 2);
  }
  const double s = silhouette(mixed, mixed_labels);
  CHECK(std::abs(s) < 0.05);
  CHECK(s >= -1.0);

  const std::vector<int> one_cluster{0, 0, 0, 0};
  CHECK_THROWS_AS(silhouette(pts, one_cluster), InputError);
  const std::vector<int> bad{0, 0, 1, 2};
  CHECK_THROWS_AS(silhouette(pts, bad), InputError);
}

TEST_CASE("fitness") {
  const auto hidden = hidden_params();
  const auto ref = make_reference(hidden, 200, 1);
  REQUIRE(ref.edges.size() == 200);

  const double self = fitness(encode(hidden), ref, 200, 99);
  CHECK(self >= 0.0);
  CHECK(self < 0.1);
  CHECK(fitness(encode(hidden), ref, 200, 99) == self);

  PhysicsParams heavy;
  heavy.exposure_rate = 0.4;
  heavy.corrosion_steps = 300;
  const auto heavy_ref = make_reference(heavy, 200, 2);
  PhysicsParams clean;
  clean.base_rate = 0.0;
  clean.exposure_rate = 0.0;
  clean.corrosion_steps = 0;
  const double far = fitness(encode(clean), heavy_ref, 200, 5);
  CHECK(far > 0.3);
  CHECK(far <= 1.0);

  CHECK_THROWS_AS(fitness(encode(hidden), ref, 2, 0), InputError);
}

TEST_CASE("sample_edges alternates sides") {
  PhysicsParams p;
  const auto edges = sample_edges(p, 4, 8);
  REQUIRE(edges.size() == 4);
  CHECK(edges[0].role == EdgeRole::lower_top);
  CHECK(edges[1].role == EdgeRole::upper_bottom);
  const auto again = sample_edges(p, 4, 8);
  CHECK(edges[2].values == again[2].values);
}

TEST_CASE("genetic search") {
  const auto ref = make_reference(hidden_params(), 60, 3);

  SUBCASE("an identical population without mutation is a fixed point") {
    GaConfig cfg;
    cfg.pop_size = 6;
    cfg.generations = 3;
    cfg.mutation_sigma = 0.0;
    const Genome g = encode(PhysicsParams{});
    cfg.initial_population.assign(6, g);
    const auto r = calibrate(ref, cfg);
    CHECK(r.best == g);
    for (const auto& member : r.final_population) CHECK(member == g);
    for (double h : r.history) CHECK(h == r.history.front());
  }
  SUBCASE("elitism keeps the history non-increasing") {
    GaConfig cfg;
    cfg.pop_size = 8;
    cfg.generations = 5;
    cfg.seed = 17;
    const auto r = calibrate(ref, cfg);
    REQUIRE(r.history.size() == 6);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.best_fitness == r.history.back());
    CHECK(r.best.within_bounds());
    for (const auto& member : r.final_population) CHECK(member.within_bounds());
    const auto again = calibrate(ref, cfg);
    CHECK(again.best == r.best);
    CHECK(again.history == r.history);
  }
  SUBCASE("invalid configurations") {
    GaConfig cfg;
    cfg.pop_size = 2;
    CHECK_THROWS_AS(calibrate(ref, cfg), InputError);
    cfg = GaConfig{};
    cfg.elitism = cfg.pop_size;
    CHECK_THROWS_AS(calibrate(ref, cfg), InputError);
    cfg = GaConfig{};
    cfg.crossover_rate = 1.5;
    CHECK_THROWS_AS(calibrate(ref, cfg), InputError);
    cfg = GaConfig{};
    cfg.initial_population.resize(3);
    CHECK_THROWS_AS(calibrate(ref, cfg), InputError);
    CHECK_THROWS_AS(calibrate(ReferenceSet{}, GaConfig{}), InputError);
  }
}
