#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slipforge/physics.hpp"

namespace slipforge {

enum class Group { upper, lower };

constexpr Group opposite(Group g) noexcept {
  return g == Group::upper ? Group::lower : Group::upper;
}
std::string_view to_string(Group g) noexcept;
Group parse_group(std::string_view s);  // throws InputError

struct FragmentProvenance {
  std::string pair_id;
  std::uint64_t seed = 0;
  friend bool operator==(const FragmentProvenance&, const FragmentProvenance&) = default;
};

struct Fragment {
  std::string id;
  Group group = Group::upper;
  std::vector<double> edge;
  std::optional<FragmentProvenance> provenance;
  friend bool operator==(const Fragment&, const Fragment&) = default;
};

struct GroundTruthPair {
  std::string upper_id;
  std::string lower_id;
  friend bool operator==(const GroundTruthPair&, const GroundTruthPair&) = default;
};

inline constexpr int kManifestVersion = 1;

struct DatasetManifest {
  int format_version = kManifestVersion;
  std::vector<Fragment> fragments;
  std::vector<GroundTruthPair> ground_truth;
  std::optional<PhysicsParams> params;
  std::optional<std::uint64_t> seed;

  /// Throws InvariantError on duplicate ids, dangling or group-inconsistent
  /// ground truth, or empty edges.
  void validate() const;

  std::size_t count(Group g) const;

  /// Fragments competing with one side's targets: every fragment except the
  /// targets of a single direction (true counterparts plus interference).
  std::size_t candidate_pool_size() const { return fragments.size() - ground_truth.size(); }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Read-only lookup tables over a manifest. The manifest must outlive it.
class DatasetIndex {
public:
  explicit DatasetIndex(const DatasetManifest& manifest);

  const DatasetManifest& manifest() const noexcept { return *manifest_; }
  const Fragment* find(std::string_view id) const;
  const Fragment& at(std::string_view id) const;  // throws NotFoundError
  std::optional<std::string> match_of(std::string_view id) const;
  /// Positions in manifest().fragments of every fragment in group g, in file order.
  const std::vector<std::size_t>& members(Group g) const {
    return g == Group::upper ? upper_ : lower_;
  }

private:
  const DatasetManifest* manifest_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::string> match_;
  std::vector<std::size_t> upper_;
  std::vector<std::size_t> lower_;
};

/// n_pairs complementary pairs plus n_interference single fragments whose
/// complements are discarded. Interference fragments alternate between the
/// lower and upper group. Pair i is seeded with derive_seed(seed, i).
DatasetManifest generate_dataset(const PhysicsParams& params, std::size_t n_pairs,
                                 std::size_t n_interference, std::uint64_t seed);

}  // namespace slipforge
