#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "selfadapt/dataset.hpp"
#include "selfadapt/decision_tree.hpp"
#include "selfadapt/distribution.hpp"

namespace selfadapt {

/// Half the squared distance between two distributions. 0 means identical,
/// 1 means disjoint point masses; lower is more plausible.
inline double plausibility(const ClassDistribution& p, const ClassDistribution& p_hat) {
  require_same_size(p, p_hat);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p_hat[i] - p[i];
    sum += diff * diff;
  }
  return 0.5 * sum;
}

inline double purity(const ClassDistribution& p) { return p.max(); }

/// Histogram intersection of the adapted outputs with the training
/// distribution.
inline double purity_hat(const ClassDistribution& p, const ClassDistribution& p_hat) {
  require_same_size(p, p_hat);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::min(p_hat[i], p[i]);
  return sum;
}

inline double gain(const ClassDistribution& p, const ClassDistribution& p_hat) { return purity_hat(p, p_hat) - purity(p); }

struct RegionScore {
  std::size_t region_id = 0;
  ClassDistribution p;
  ClassDistribution p_hat;
  double plausibility = 0.0;
  double purity = 0.0;
  double purity_hat = 0.0;
  double gain = 0.0;
  /// Fraction of the original training points that fall into the region.
  double weight = 0.0;
  /// False when no adaptation point projects onto the region.
  bool included = false;
};

struct AggregateScore {
  double plausibility = 0.0;
  double gain = 0.0;
};

/// Histogram of the adapted tree's hard outputs over the adaptation points
/// that project onto region `r` of the original tree.
inline ClassDistribution region_p_hat(const DecisionTree& tree_2d, const DecisionTree& tree_1d, std::size_t r,
                                      std::span<const Sample> adapt_points) {
  std::vector<double> counts(tree_1d.num_classes(), 0.0);
  for (const Sample& s : adapt_points) {
    if (tree_1d.region_of(s) == r) counts[tree_2d.classify(s)] += 1.0;
  }
  return ClassDistribution::from_counts(counts);
}

inline RegionScore score_region(std::size_t r, const ClassDistribution& p, const ClassDistribution& p_hat, double weight) {
  RegionScore s;
  s.region_id = r;
  s.p = p;
  s.p_hat = p_hat;
  s.weight = weight;
  s.included = !p_hat.empty();
  if (s.included) {
    s.plausibility = plausibility(p, p_hat);
    s.purity = purity(p);
    s.purity_hat = purity_hat(p, p_hat);
    s.gain = s.purity_hat - s.purity;
  }
  return s;
}

/// Scores every region of the original tree in one pass over the points.
inline std::vector<RegionScore> score_regions(const DecisionTree& tree_2d, const DecisionTree& tree_1d,
                                              std::span<const Sample> adapt_points) {
  const std::size_t nr = tree_1d.num_regions();
  std::vector<std::vector<double>> counts(nr, std::vector<double>(tree_1d.num_classes(), 0.0));
  for (const Sample& s : adapt_points) counts[tree_1d.region_of(s)][tree_2d.classify(s)] += 1.0;

  double total_train = 0.0;
  for (std::size_t r = 0; r < nr; ++r) total_train += static_cast<double>(tree_1d.region(r).train_count);

  std::vector<RegionScore> scores;
  scores.reserve(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    const double w = total_train > 0.0 ? static_cast<double>(tree_1d.region(r).train_count) / total_train : 0.0;
    scores.push_back(score_region(r, tree_1d.leaf_distribution(r), ClassDistribution::from_counts(counts[r]), w));
  }
  return scores;
}

/// Weighted means over included regions, with weights renormalized to the
/// included set.
inline AggregateScore aggregate(std::span<const RegionScore> scores) {
  double wsum = 0.0;
  AggregateScore agg;
  for (const RegionScore& s : scores) {
    if (!s.included) continue;
    wsum += s.weight;
    agg.plausibility += s.weight * s.plausibility;
    agg.gain += s.weight * s.gain;
  }
  if (!(wsum > 0.0)) throw Error(ErrorKind::EmptyInput, "no scoreable regions");
  agg.plausibility /= wsum;
  agg.gain /= wsum;
  return agg;
}

}  // namespace selfadapt
