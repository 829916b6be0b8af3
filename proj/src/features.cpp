#include "slipforge/features.hpp"

#include <numeric>

#include "slipforge/error.hpp"

namespace slipforge {

std::vector<double> resample_linear(std::span<const double> samples, std::size_t count) {
  if (samples.size() < 2) throw InputError("edge needs at least 2 samples");
  std::vector<double> out(count);
  if (count == 0) return out;
  if (count == 1) {
    out[0] = samples.front();
    return out;
  }
  const double last = static_cast<double>(samples.size() - 1);
  for (std::size_t j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) * last / static_cast<double>(count - 1);
    auto i = static_cast<std::size_t>(t);
    if (i >= samples.size() - 1) {
      out[j] = samples.back();
      continue;
    }
    const double frac = t - static_cast<double>(i);
    out[j] = frac == 0.0 ? samples[i] : samples[i] + frac * (samples[i + 1] - samples[i]);
  }
  return out;
}

EdgeVector extract_edge_vector(std::span<const double> edge, EdgeRole role,
                               std::string source_fragment_id) {
  const auto resampled = resample_linear(edge, kEdgeDim);
  const double mean = std::accumulate(resampled.begin(), resampled.end(), 0.0) / kEdgeDim;
  EdgeVector v;
  v.role = role;
  v.source_fragment_id = std::move(source_fragment_id);
  for (std::size_t i = 0; i < kEdgeDim; ++i) v.values[i] = resampled[i] - mean;
  return v;
}

}  // namespace slipforge
