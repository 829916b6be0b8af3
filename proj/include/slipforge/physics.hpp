#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slipforge/rng.hpp"

namespace slipforge {

/// Fracture and corrosion model parameters. Also the genome decoded by the
/// calibration GA.
struct PhysicsParams {
  int n_fibers = 64;
  double fiber_width = 1.0;
  double theta_max = 1.2;     // radians, bound on |theta_i|
  double sigma_theta = 0.55;  // radians
  double rho = 0.6;           // persistence of the previous fiber's angle
  double beta = 0.05;         // pull back toward the initial crack plane
  double base_rate = 0.02;    // uniform removal per step
  double exposure_rate = 0.2; // removal per unit of exposed height
  int corrosion_steps = 20;
  std::uint64_t seed = 0;

  /// Throws ParameterError naming the first violated bound.
  void validate() const;

  /// Largest admissible height change between neighbouring fibers.
  double max_step() const;

  friend bool operator==(const PhysicsParams&, const PhysicsParams&) = default;
};

struct FractureCurve {
  std::vector<double> heights;
  std::vector<double> angles;
};

struct FragmentPair {
  std::string pair_id;
  std::vector<double> upper_edge;  // bottom edge of the upper fragment
  std::vector<double> lower_edge;  // top edge of the lower fragment
  PhysicsParams params;            // provenance
  std::uint64_t seed = 0;
};

/// Samples one transverse crack, fiber by fiber. Angle i is a truncated normal
/// centred on rho*theta_{i-1} - beta*h_{i-1}; heights accumulate w*tan(theta).
FractureCurve simulate_fracture(const PhysicsParams& params, Rng& rng);

/// Truncated normal on [lo, hi] by rejection, 64 attempts then clamp.
double sample_truncated_normal(Rng& rng, double mean, double sigma, double lo, double hi);

/// One synchronous corrosion step on a lower fragment's top edge
/// (protrusions point up, material is removed downward).
void corrode_lower_step(std::vector<double>& edge, double base_rate, double exposure_rate);

/// One synchronous corrosion step on an upper fragment's bottom edge
/// (protrusions point down, material is removed upward).
void corrode_upper_step(std::vector<double>& edge, double base_rate, double exposure_rate);

/// Applies params.corrosion_steps steps to both edges of the pair.
FragmentPair corrode_pair(const FragmentPair& pair, const PhysicsParams& params);

FragmentPair generate_pair(const PhysicsParams& params, std::uint64_t seed);

}  // namespace slipforge
