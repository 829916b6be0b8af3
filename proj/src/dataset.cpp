#include "slipforge/dataset.hpp"

#include <cstdio>
#include <unordered_set>

#include "slipforge/error.hpp"

namespace slipforge {

std::string_view to_string(Group g) noexcept { return g == Group::upper ? "upper" : "lower"; }

Group parse_group(std::string_view s) {
  if (s == "upper") return Group::upper;
  if (s == "lower") return Group::lower;
  throw InputError("unknown group '" + std::string(s) + "'");
}

void DatasetManifest::validate() const {
  std::unordered_map<std::string, Group> groups;
  for (const auto& f : fragments) {
    if (f.id.empty()) throw InvariantError("fragment with empty id");
    if (f.edge.size() < 2) throw InvariantError("fragment " + f.id + " has fewer than 2 edge samples");
    if (!groups.emplace(f.id, f.group).second) throw InvariantError("duplicate fragment id " + f.id);
  }
  std::unordered_set<std::string> paired;
  for (const auto& gt : ground_truth) {
    auto u = groups.find(gt.upper_id);
    auto l = groups.find(gt.lower_id);
    if (u == groups.end() || l == groups.end())
      throw InvariantError("ground truth references unknown fragment " + gt.upper_id + "/" + gt.lower_id);
    if (u->second != Group::upper || l->second != Group::lower)
      throw InvariantError("ground truth pair " + gt.upper_id + "/" + gt.lower_id + " has inconsistent groups");
    if (!paired.insert(gt.upper_id).second || !paired.insert(gt.lower_id).second)
      throw InvariantError("fragment paired more than once in " + gt.upper_id + "/" + gt.lower_id);
  }
}

std::size_t DatasetManifest::count(Group g) const {
  std::size_t n = 0;
  for (const auto& f : fragments) n += f.group == g;
  return n;
}

DatasetIndex::DatasetIndex(const DatasetManifest& manifest) : manifest_(&manifest) {
  const auto& frags = manifest.fragments;
  by_id_.reserve(frags.size());
  for (std::size_t i = 0; i < frags.size(); ++i) {
    by_id_.emplace(frags[i].id, i);
    (frags[i].group == Group::upper ? upper_ : lower_).push_back(i);
  }
  for (const auto& gt : manifest.ground_truth) {
    match_.emplace(gt.upper_id, gt.lower_id);
    match_.emplace(gt.lower_id, gt.upper_id);
  }
}

const Fragment* DatasetIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &manifest_->fragments[it->second];
}

const Fragment& DatasetIndex::at(std::string_view id) const {
  if (const Fragment* f = find(id)) return *f;
  throw NotFoundError("unknown fragment id " + std::string(id));
}

std::optional<std::string> DatasetIndex::match_of(std::string_view id) const {
  auto it = match_.find(std::string(id));
  if (it == match_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string make_id(char prefix, std::size_t index, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu%s", prefix, index, suffix);
  return buf;
}

}  // namespace

DatasetManifest generate_dataset(const PhysicsParams& params, std::size_t n_pairs,
                                 std::size_t n_interference, std::uint64_t seed) {
  if (n_pairs < 1) throw InputError("n_pairs must be >= 1");
  params.validate();

  const std::size_t total = n_pairs + n_interference;
  std::vector<FragmentPair> pairs(total);
  // Each pair owns a derived seed, so the loop order does not matter.
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(total); ++i) {
    pairs[i] = generate_pair(params, derive_seed(seed, static_cast<std::uint64_t>(i)));
  }

  DatasetManifest m;
  m.params = params;
  m.params->seed = seed;
  m.seed = seed;
  m.fragments.reserve(2 * n_pairs + n_interference);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    auto& p = pairs[i];
    p.pair_id = make_id('P', i, "");
    const FragmentProvenance prov{p.pair_id, p.seed};
    m.fragments.push_back({make_id('P', i, "-U"), Group::upper, std::move(p.upper_edge), prov});
    m.fragments.push_back({make_id('P', i, "-L"), Group::lower, std::move(p.lower_edge), prov});
    m.ground_truth.push_back({m.fragments[m.fragments.size() - 2].id, m.fragments.back().id});
  }
  for (std::size_t j = 0; j < n_interference; ++j) {
    auto& p = pairs[n_pairs + j];
    p.pair_id = make_id('I', j, "");
    const FragmentProvenance prov{p.pair_id, p.seed};
    if (j % 2 == 0) {
      m.fragments.push_back({make_id('I', j, "-L"), Group::lower, std::move(p.lower_edge), prov});
    } else {
      m.fragments.push_back({make_id('I', j, "-U"), Group::upper, std::move(p.upper_edge), prov});
    }
  }
  return m;
}

}  // namespace slipforge
