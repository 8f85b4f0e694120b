#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "selfadapt/adaptation.hpp"
#include "selfadapt/quality.hpp"

namespace selfadapt {

struct AdaptedSolution {
  DecisionTree tree_2d;
  std::size_t k = 0;
  ClusterLabeling labeling;
  /// Per region of the original tree.
  std::vector<RegionExtension> extensions;
  std::vector<RegionScore> scores;
  AggregateScore aggregate;

  std::size_t extended_regions() const {
    return static_cast<std::size_t>(
        std::count_if(extensions.begin(), extensions.end(), [](const RegionExtension& e) { return e.extended(); }));
  }
};

/// Extends the original tree with a labelling and scores the result on the
/// adaptation points.
inline AdaptedSolution make_solution(const DecisionTree& tree_1d, std::span<const Sample> adapt_points,
                                     const ClusterAssignment& assignment, ClusterLabeling labeling,
                                     std::size_t min_leaf) {
  AdaptedSolution sol;
  Extension ext = extend_tree(tree_1d, adapt_points, assignment, labeling, min_leaf);
  sol.tree_2d = std::move(ext.tree_2d);
  sol.extensions = std::move(ext.regions);
  sol.k = assignment.k;
  sol.labeling = std::move(labeling);
  sol.scores = score_regions(sol.tree_2d, tree_1d, adapt_points);
  sol.aggregate = aggregate(sol.scores);
  return sol;
}

/// Plausible candidates (aggregate plausibility <= plTH) ordered by
/// preference: higher gain first, then smaller k.
inline std::vector<std::size_t> rank_solutions(std::span<const AdaptedSolution> candidates, double pl_threshold) {
  if (!(pl_threshold >= 0.0 && pl_threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "plausibility threshold must lie in [0, 1]");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].aggregate.plausibility <= pl_threshold && candidates[i].aggregate.gain > 0.0) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = candidates[a];
    const auto& sb = candidates[b];
    if (sa.aggregate.gain != sb.aggregate.gain) return sa.aggregate.gain > sb.aggregate.gain;
    return sa.k < sb.k;
  });
  return idx;
}

/// The plausible candidate with the highest aggregate gain, or nothing when
/// no candidate is plausible or none promises a positive gain.
inline std::optional<std::size_t> select_solution(std::span<const AdaptedSolution> candidates, double pl_threshold) {
  const auto ranked = rank_solutions(candidates, pl_threshold);
  if (ranked.empty()) return std::nullopt;
  return ranked.front();
}

}  // namespace selfadapt
