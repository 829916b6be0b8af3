#include "slipforge/physics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "slipforge/dataset.hpp"
#include "slipforge/error.hpp"

namespace slipforge {

void PhysicsParams::validate() const {
  auto fail = [](const std::string& what) { throw ParameterError(what); };
  if (n_fibers < 2) fail("n_fibers must be >= 2");
  if (!(fiber_width > 0)) fail("fiber_width must be > 0");
  if (!(theta_max > 0 && theta_max < std::numbers::pi / 2)) fail("theta_max must lie in (0, pi/2)");
  if (!(sigma_theta > 0)) fail("sigma_theta must be > 0");
  if (!(rho >= 0 && rho < 1)) fail("rho must lie in [0, 1)");
  if (!(beta >= 0)) fail("beta must be >= 0");
  if (!(base_rate >= 0)) fail("base_rate must be >= 0");
  if (!(exposure_rate >= 0)) fail("exposure_rate must be >= 0");
  if (corrosion_steps < 0) fail("corrosion_steps must be >= 0");
}

double PhysicsParams::max_step() const { return fiber_width * std::tan(theta_max); }

double sample_truncated_normal(Rng& rng, double mean, double sigma, double lo, double hi) {
  std::normal_distribution<double> normal(mean, sigma);
  double x = 0.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    x = normal(rng);
    if (x >= lo && x <= hi) return x;
  }
  return x < lo ? lo : hi;
}

FractureCurve simulate_fracture(const PhysicsParams& params, Rng& rng) {
  params.validate();
  const auto n = static_cast<std::size_t>(params.n_fibers);
  const double lo = -params.theta_max;
  const double hi = params.theta_max;

  FractureCurve curve;
  curve.heights.resize(n);
  curve.angles.resize(n);
  curve.heights[0] = 0.0;
  curve.angles[0] = sample_truncated_normal(rng, 0.0, params.sigma_theta, lo, hi);
  for (std::size_t i = 1; i < n; ++i) {
    const double mean = params.rho * curve.angles[i - 1] - params.beta * curve.heights[i - 1];
    const double theta = sample_truncated_normal(rng, mean, params.sigma_theta, lo, hi);
    curve.angles[i] = theta;
    curve.heights[i] = curve.heights[i - 1] + params.fiber_width * std::tan(theta);
  }
  return curve;
}

namespace {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// sign = +1: protrusions stick up (lower fragment), removal lowers heights.
// sign = -1: protrusions stick down (upper fragment), removal raises heights.
void corrode_step(std::vector<double>& edge, double base_rate, double exposure_rate, double sign) {
  const std::size_t n = edge.size();
  if (n == 0) return;
  std::vector<double> removal(n);
  for (std::size_t i = 0; i < n; ++i) {
    double exposure = 0.0;
    if (i > 0) exposure += relu(sign * (edge[i] - edge[i - 1]));
    if (i + 1 < n) exposure += relu(sign * (edge[i] - edge[i + 1]));
    removal[i] = base_rate + exposure_rate * exposure;
  }
  for (std::size_t i = 0; i < n; ++i) edge[i] -= sign * removal[i];
}

}  // namespace

void corrode_lower_step(std::vector<double>& edge, double base_rate, double exposure_rate) {
  corrode_step(edge, base_rate, exposure_rate, +1.0);
}

void corrode_upper_step(std::vector<double>& edge, double base_rate, double exposure_rate) {
  corrode_step(edge, base_rate, exposure_rate, -1.0);
}

FragmentPair corrode_pair(const FragmentPair& pair, const PhysicsParams& params) {
  params.validate();
  FragmentPair out = pair;
  for (int step = 0; step < params.corrosion_steps; ++step) {
    corrode_lower_step(out.lower_edge, params.base_rate, params.exposure_rate);
    corrode_upper_step(out.upper_edge, params.base_rate, params.exposure_rate);
  }
  return out;
}

FragmentPair generate_pair(const PhysicsParams& params, std::uint64_t seed) {
  Rng rng(seed);
  FractureCurve curve = simulate_fracture(params, rng);
  FragmentPair pair;
  pair.upper_edge = curve.heights;
  pair.lower_edge = std::move(curve.heights);
  pair.params = params;
  pair.params.seed = seed;
  pair.seed = seed;
  return corrode_pair(pair, params);
}

}  // namespace slipforge
