#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "selfadapt/dataset.hpp"
#include "selfadapt/error.hpp"

namespace selfadapt {

struct GaussianComponent {
  std::array<double, 2> mean{};
  std::array<double, 2> variance{};  // diagonal covariance
  double weight = 1.0;
  ClassId label = 0;
};

struct SyntheticScenario {
  std::vector<GaussianComponent> components;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset data;
  /// Generating component of every sample.
  std::vector<std::size_t> component;
};

/// Draws a two-feature labelled dataset. Component sizes are apportioned by
/// weight (largest remainder) and the samples are shuffled.
inline SyntheticData generate_synthetic(const SyntheticScenario& sc) {
  if (sc.components.empty()) throw Error(ErrorKind::InvalidArgument, "scenario has no components");
  double wsum = 0.0;
  ClassId max_label = 0;
  for (const auto& c : sc.components) {
    if (!(c.weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "component weight must be positive");
    if (!(c.variance[0] > 0.0 && c.variance[1] > 0.0)) throw Error(ErrorKind::InvalidArgument, "invalid covariance");
    wsum += c.weight;
    max_label = std::max(max_label, c.label);
  }

  std::vector<std::size_t> counts(sc.components.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double exact = static_cast<double>(sc.samples) * sc.components[i].weight / wsum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < sc.samples; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticData out;
  out.data.num_classes = max_label + 1;
  out.data.feature_names = {"f0", "f1"};
  std::vector<std::size_t> comp;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = sc.components[i];
    for (std::size_t k = 0; k < counts[i]; ++k) {
      Sample s;
      s.features = {c.mean[0] + std::sqrt(c.variance[0]) * normal(rng), c.mean[1] + std::sqrt(c.variance[1]) * normal(rng)};
      s.label = c.label;
      out.data.samples.push_back(std::move(s));
      comp.push_back(i);
    }
  }
  const auto perm = seeded_permutation(out.data.size(), sc.seed ^ 0x9e3779b97f4a7c15ULL);
  Dataset shuffled = out.data.subset(perm);
  out.data = std::move(shuffled);
  out.component.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out.component[i] = comp[perm[i]];
  return out;
}

/// Chain of Gaussians spaced 2 sigma apart along the base feature, which
/// together give a roughly flat density on [first_mean, last_mean] widened by
/// one sigma at each end.
inline std::vector<GaussianComponent> base_block(double first_mean, double last_mean, double new_mean, ClassId label,
                                                 double class_weight = 1.0, double spacing = 0.1) {
  const double sigma = spacing / 2.0;
  const auto n = static_cast<std::size_t>(std::llround((last_mean - first_mean) / spacing)) + 1;
  std::vector<GaussianComponent> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({{first_mean + static_cast<double>(i) * spacing, new_mean},
                   {sigma * sigma, 0.05 * 0.05},
                   class_weight / static_cast<double>(n),
                   label});
  }
  return out;
}

/// Three pure-class clusters. On the base feature, classes 0/1 and 1/2
/// overlap as even mixtures on [0.3, 0.45] and [0.55, 0.7]; each class also
/// owns a stretch of its own. The new feature separates all three.
inline SyntheticScenario scenario_a(std::size_t samples = 600, std::uint64_t seed = 7) {
  SyntheticScenario sc;
  sc.samples = samples;
  sc.seed = seed;
  for (auto&& block : {base_block(0.10, 0.40, 0.20, 0), base_block(0.35, 0.65, 0.80, 1), base_block(0.60, 0.90, 0.50, 2)}) {
    sc.components.insert(sc.components.end(), block.begin(), block.end());
  }
  return sc;
}

/// Scenario A plus a fourth class whose base values lie inside the 0/1
/// overlap, so its cluster never owns a base-feature region.
inline SyntheticScenario scenario_b(std::size_t samples = 600, std::uint64_t seed = 7) {
  SyntheticScenario sc = scenario_a(samples, seed);
  sc.components.push_back({{0.375, 0.50}, {0.05 * 0.05, 0.03 * 0.03}, 0.3, 3});
  return sc;
}

/// Index of the hidden component in scenario B.
inline constexpr std::size_t kScenarioBHiddenComponent = 12;

inline SyntheticScenario scenario_by_name(const std::string& name, std::size_t samples, std::uint64_t seed) {
  if (name == "A" || name == "a") return scenario_a(samples, seed);
  if (name == "B" || name == "b") return scenario_b(samples, seed);
  throw Error(ErrorKind::InvalidArgument, "unknown scenario '" + name + "'");
}

}  // namespace selfadapt
