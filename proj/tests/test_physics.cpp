#include <doctest.h>

#include <cmath>

#include "slipforge/dataset.hpp"
#include "slipforge/error.hpp"
#include "slipforge/physics.hpp"

using namespace slipforge;

TEST_CASE("params validation names the violated bound") {
  PhysicsParams p;
  CHECK_NOTHROW(p.validate());
  auto bad = [](auto mutate) {
    PhysicsParams q;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), ParameterError);
  };
  bad([](PhysicsParams& q) { q.n_fibers = 1; });
  bad([](PhysicsParams& q) { q.fiber_width = 0; });
  bad([](PhysicsParams& q) { q.theta_max = 1.6; });
  bad([](PhysicsParams& q) { q.theta_max = 0; });
  bad([](PhysicsParams& q) { q.sigma_theta = 0; });
  bad([](PhysicsParams& q) { q.rho = 1.0; });
  bad([](PhysicsParams& q) { q.beta = -0.1; });
  bad([](PhysicsParams& q) { q.base_rate = -1; });
  bad([](PhysicsParams& q) { q.exposure_rate = -1; });
  bad([](PhysicsParams& q) { q.corrosion_steps = -1; });

  Rng rng(1);
  PhysicsParams q;
  q.n_fibers = 0;
  CHECK_THROWS_AS(simulate_fracture(q, rng), ParameterError);
}

TEST_CASE("vanishing angle noise gives a flat fracture") {
  PhysicsParams p;
  p.sigma_theta = 1e-12;
  p.rho = 0;
  p.beta = 0;
  Rng rng(3);
  const auto c = simulate_fracture(p, rng);
  REQUIRE(c.heights.size() == 64);
  REQUIRE(c.angles.size() == 64);
  for (double h : c.heights) CHECK(std::abs(h) < 1e-9);
  for (double a : c.angles) CHECK(std::abs(a) < 1e-9);
}

TEST_CASE("fracture steps are bounded and reproducible over 1000 seeds") {
  PhysicsParams p;
  const double bound = p.max_step() + 1e-12;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng a(seed), b(seed);
    const auto c1 = simulate_fracture(p, a);
    const auto c2 = simulate_fracture(p, b);
    REQUIRE(c1.heights == c2.heights);
    REQUIRE(c1.angles == c2.angles);
    CHECK(c1.heights[0] == 0.0);
    for (std::size_t i = 1; i < c1.heights.size(); ++i) {
      REQUIRE(std::abs(c1.heights[i] - c1.heights[i - 1]) <= bound);
      REQUIRE(std::abs(c1.angles[i]) <= p.theta_max);
    }
  }
}

TEST_CASE("mean reversion shrinks the end-height variance") {
  auto end_variance = [](double beta) {
    PhysicsParams p;
    p.beta = beta;
    double sum = 0, sq = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed) {
      Rng rng(static_cast<std::uint64_t>(seed));
      const double h = simulate_fracture(p, rng).heights.back();
      sum += h;
      sq += h * h;
    }
    const double mean = sum / n;
    return sq / n - mean * mean;
  };
  const double with = end_variance(0.05);
  const double without = end_variance(0.0);
  CHECK(with < without);
}

TEST_CASE("truncated normal stays in range and clamps when rejection fails") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated_normal(rng, 0.3, 1.0, -0.5, 0.5);
    CHECK(x >= -0.5);
    CHECK(x <= 0.5);
  }
  // Mean 100 sigma above the interval: every draw is rejected.
  CHECK(sample_truncated_normal(rng, 100.0, 1.0, -1.0, 1.0) == 1.0);
  CHECK(sample_truncated_normal(rng, -100.0, 1.0, -1.0, 1.0) == -1.0);
}

TEST_CASE("corrosion worked examples") {
  SUBCASE("flat lower edge only loses the base rate") {
    std::vector<double> g{5, 5, 5, 5};
    corrode_lower_step(g, 0.1, 1.0);
    for (double v : g) CHECK(v == doctest::Approx(4.9).epsilon(1e-15));
  }
  SUBCASE("single spike erodes, flats untouched") {
    std::vector<double> g{0, 1, 0};
    corrode_lower_step(g, 0.0, 0.1);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(g[2] == 0.0);
  }
  SUBCASE("upper edge mirror: a downward spike is raised") {
    std::vector<double> u{0, -1, 0};
    corrode_upper_step(u, 0.0, 0.1);
    CHECK(u[0] == 0.0);
    CHECK(u[1] == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(u[2] == 0.0);
  }
  SUBCASE("boundary fibers use their single neighbour") {
    std::vector<double> g{2, 0, 0};
    corrode_lower_step(g, 0.0, 0.5);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == 0.0);
  }
  SUBCASE("zero steps is the identity") {
    PhysicsParams p;
    p.corrosion_steps = 0;
    FragmentPair pair;
    pair.upper_edge = {1, 3, 2};
    pair.lower_edge = {0, 2, 1};
    const auto out = corrode_pair(pair, p);
    CHECK(out.upper_edge == pair.upper_edge);
    CHECK(out.lower_edge == pair.lower_edge);
  }
}

TEST_CASE("flat edges shift uniformly under corrosion") {
  PhysicsParams p;
  p.corrosion_steps = 7;
  FragmentPair pair;
  pair.upper_edge.assign(10, 2.0);
  pair.lower_edge.assign(10, 2.0);
  const auto out = corrode_pair(pair, p);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(out.lower_edge[i] == doctest::Approx(2.0 - 7 * p.base_rate));
    CHECK(out.upper_edge[i] == doctest::Approx(2.0 + 7 * p.base_rate));
  }
}

TEST_CASE("gap grows monotonically and each step removes at least n*base_rate") {
  PhysicsParams p;
  Rng rng(5);
  const auto curve = simulate_fracture(p, rng);
  std::vector<double> u = curve.heights, g = curve.heights;
  std::vector<double> gap(u.size(), 0.0);
  for (int step = 0; step < 30; ++step) {
    const auto g_before = g;
    const auto u_before = u;
    corrode_lower_step(g, p.base_rate, p.exposure_rate);
    corrode_upper_step(u, p.base_rate, p.exposure_rate);
    double removed = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double next_gap = u[i] - g[i];
      REQUIRE(next_gap >= gap[i]);
      gap[i] = next_gap;
      removed += (g_before[i] - g[i]);
      REQUIRE(u[i] >= u_before[i]);
    }
    CHECK(removed >= p.n_fibers * p.base_rate - 1e-12);
  }
}

TEST_CASE("generate_pair invariants") {
  PhysicsParams p;
  SUBCASE("uncorroded pairs share one curve") {
    p.corrosion_steps = 0;
    const auto pair = generate_pair(p, 7);
    CHECK(pair.upper_edge == pair.lower_edge);
  }
  SUBCASE("corroded pairs keep a nonnegative gap over 1000 seeds") {
    p.corrosion_steps = 20;
    for (std::uint64_t seed = 7; seed < 1007; ++seed) {
      const auto pair = generate_pair(p, seed);
      for (std::size_t i = 0; i < pair.upper_edge.size(); ++i) REQUIRE(pair.upper_edge[i] >= pair.lower_edge[i]);
    }
  }
  SUBCASE("different seeds give different pairs; same seed is bit-identical") {
    CHECK(generate_pair(p, 7).lower_edge != generate_pair(p, 8).lower_edge);
    CHECK(generate_pair(p, 7).lower_edge == generate_pair(p, 7).lower_edge);
    CHECK(generate_pair(p, 7).seed == 7);
    CHECK(generate_pair(p, 7).params.seed == 7);
  }
}

TEST_CASE("generate_dataset sizes and ground truth") {
  PhysicsParams p;
  SUBCASE("118 pairs") {
    const auto m = generate_dataset(p, 118, 0, 1);
    CHECK(m.count(Group::upper) == 118);
    CHECK(m.count(Group::lower) == 118);
    CHECK(m.ground_truth.size() == 118);
    CHECK_NOTHROW(m.validate());
  }
  SUBCASE("118 pairs plus 1114 interference fragments") {
    const auto m = generate_dataset(p, 118, 1114, 1);
    CHECK(m.fragments.size() == 1350);
    CHECK(m.candidate_pool_size() == 1232);
    CHECK(m.ground_truth.size() == 118);
    CHECK(m.count(Group::upper) == 118 + 557);
    CHECK(m.count(Group::lower) == 118 + 557);
    CHECK_NOTHROW(m.validate());
  }
  SUBCASE("a single pair") {
    const auto m = generate_dataset(p, 1, 0, 1);
    REQUIRE(m.fragments.size() == 2);
    CHECK(m.ground_truth.front().upper_id == m.fragments[0].id);
    CHECK(m.ground_truth.front().lower_id == m.fragments[1].id);
  }
  SUBCASE("zero pairs is rejected") { CHECK_THROWS_AS(generate_dataset(p, 0, 3, 1), InputError); }
  SUBCASE("parallel generation matches per-pair generation") {
    const auto m = generate_dataset(p, 20, 6, 99);
    for (std::size_t i = 0; i < 20; ++i) {
      const auto pair = generate_pair(p, derive_seed(99, i));
      CHECK(m.fragments[2 * i].edge == pair.upper_edge);
      CHECK(m.fragments[2 * i + 1].edge == pair.lower_edge);
    }
    const auto interference0 = generate_pair(p, derive_seed(99, 20));
    CHECK(m.fragments[40].group == Group::lower);
    CHECK(m.fragments[40].edge == interference0.lower_edge);
    CHECK(m.fragments[41].group == Group::upper);
  }
}
