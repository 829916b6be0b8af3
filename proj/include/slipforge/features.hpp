#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace slipforge {

inline constexpr std::size_t kEdgeDim = 64;

enum class EdgeRole { upper_bottom, lower_top };

struct EdgeVector {
  std::array<double, kEdgeDim> values{};
  std::string source_fragment_id;
  EdgeRole role = EdgeRole::lower_top;

  std::span<const double> view() const noexcept { return values; }
};

/// Linear interpolation of `samples` onto `count` evenly spaced positions
/// spanning the first to the last sample.
std::vector<double> resample_linear(std::span<const double> samples, std::size_t count);

/// Resample to 64 points and subtract the mean. Both edges of a fresh break
/// share one height coordinate, so they map to the same vector.
/// Throws InputError for fewer than 2 samples.
EdgeVector extract_edge_vector(std::span<const double> edge, EdgeRole role,
                               std::string source_fragment_id = {});

}  // namespace slipforge
