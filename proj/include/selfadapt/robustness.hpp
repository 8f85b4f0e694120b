#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "selfadapt/adaptation.hpp"
#include "selfadapt/dataset.hpp"
#include "selfadapt/decision_tree.hpp"
#include "selfadapt/solution.hpp"

namespace selfadapt {

// ---------------------------------------------------------------- bagging

struct BaggingConfig {
  std::size_t replicas = 10;
  double threshold = 0.9;
  std::uint64_t seed = 0;
};

inline void validate(const BaggingConfig& cfg) {
  if (cfg.replicas < 2) throw Error(ErrorKind::Config, "bagging needs at least 2 replicas");
  if (!(cfg.threshold > 0.5 && cfg.threshold <= 1.0)) throw Error(ErrorKind::Config, "bagging threshold must lie in (0.5, 1]");
}

/// Index lists of `replicas` bootstrap samples of size n (with replacement).
inline std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t replicas, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::EmptyInput, "cannot bootstrap an empty set");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<std::size_t>> out(replicas, std::vector<std::size_t>(n));
  for (auto& rep : out) {
    for (auto& i : rep) i = pick(rng);
  }
  return out;
}

inline std::vector<Dataset> bootstrap_replicas(const Dataset& adapt, const BaggingConfig& cfg) {
  validate(cfg);
  std::vector<Dataset> out;
  for (const auto& idx : bootstrap_indices(adapt.size(), cfg.replicas, cfg.seed)) out.push_back(adapt.subset(idx));
  return out;
}

struct MergedCell {
  ClassId label = 0;
  /// Some replica proposed a label other than the original region label.
  bool contested = false;
  /// Agreement fell below the bagging threshold and the original label was
  /// restored.
  bool reverted = false;
};

struct MergedRegion {
  std::vector<double> thresholds;  // refinement of all replicas' thresholds
  std::vector<MergedCell> cells;   // thresholds.size() + 1 cells, before joining
};

struct MergedTree {
  DecisionTree tree;
  std::vector<MergedRegion> regions;  // per original region

  /// Share of adaptation points in contested cells whose label was restored.
  double reverted_fraction(const DecisionTree& original, std::span<const Sample> points) const {
    double contested = 0.0, reverted = 0.0;
    for (const Sample& s : points) {
      const MergedRegion& mr = regions[original.region_of(s)];
      const double x = s.features[kNewFeature];
      const auto cell = static_cast<std::size_t>(std::lower_bound(mr.thresholds.begin(), mr.thresholds.end(), x) -
                                                 mr.thresholds.begin());
      if (!mr.cells[cell].contested) continue;
      contested += 1.0;
      if (mr.cells[cell].reverted) reverted += 1.0;
    }
    return contested > 0.0 ? reverted / contested : 0.0;
  }
};

namespace detail {

inline const TreeNode* cell_at(const RegionExtension& ext, double x) {
  const auto i = static_cast<std::size_t>(std::lower_bound(ext.thresholds.begin(), ext.thresholds.end(), x) -
                                          ext.thresholds.begin());
  return &ext.cells[i];
}

}  // namespace detail

/// Overlays the per-region subtrees of several solutions of the same
/// original tree. Each cell of the common refinement takes the majority
/// label when at least `threshold` of the solutions agree on it, otherwise
/// the original region label. A solution without a subtree in a region
/// votes the original label there. Adjacent cells with equal labels are
/// joined.
inline MergedTree merge_extensions(std::span<const std::vector<RegionExtension>> solutions, const DecisionTree& original,
                                   double threshold) {
  if (solutions.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to merge");
  const double n_sol = static_cast<double>(solutions.size());
  MergedTree merged;
  merged.regions.resize(original.num_regions());
  std::vector<std::optional<std::vector<TreeNode>>> replacement(original.num_regions());

  for (std::size_t r = 0; r < original.num_regions(); ++r) {
    const TreeNode& orig_leaf = original.region(r);
    const ClassId orig_label = orig_leaf.distribution.argmax();

    std::set<double> cuts;
    for (const auto& sol : solutions) {
      if (r < sol.size() && sol[r].extended()) cuts.insert(sol[r].thresholds.begin(), sol[r].thresholds.end());
    }
    MergedRegion& mr = merged.regions[r];
    mr.thresholds.assign(cuts.begin(), cuts.end());
    if (mr.thresholds.empty()) {
      mr.cells.push_back({orig_label, false, false});
      continue;
    }

    std::vector<TreeNode> cells;
    for (std::size_t j = 0; j <= mr.thresholds.size(); ++j) {
      // A point that routes into cell j of the refinement.
      const double probe = j < mr.thresholds.size() ? mr.thresholds[j] : mr.thresholds.back() + 1.0;
      std::map<ClassId, std::vector<const ClassDistribution*>> votes;
      for (const auto& sol : solutions) {
        if (r < sol.size() && sol[r].extended()) {
          const TreeNode* cell = detail::cell_at(sol[r], probe);
          votes[cell->distribution.argmax()].push_back(&cell->distribution);
        } else {
          votes[orig_label].push_back(&orig_leaf.distribution);
        }
      }
      ClassId majority = votes.begin()->first;
      std::size_t best = 0;
      for (const auto& [label, v] : votes) {
        if (v.size() > best) {
          best = v.size();
          majority = label;
        }
      }
      MergedCell mc;
      mc.contested = votes.size() > 1 || majority != orig_label;
      TreeNode node;
      if (static_cast<double>(best) / n_sol + 1e-12 >= threshold) {
        mc.label = majority;
        std::vector<double> mean(original.num_classes(), 0.0);
        for (const ClassDistribution* d : votes[majority]) {
          for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*d)[i];
        }
        node = TreeNode::leaf(ClassDistribution::from_counts(mean), 0);
      } else {
        mc.label = orig_label;
        mc.reverted = true;
        node = TreeNode::leaf(orig_leaf.distribution, 0);
      }
      mr.cells.push_back(mc);
      cells.push_back(std::move(node));
    }

    // Join runs of equal labels; the joined leaf averages the run.
    std::vector<double> joined_thresholds;
    std::vector<TreeNode> joined;
    std::size_t run_start = 0;
    for (std::size_t j = 1; j <= cells.size(); ++j) {
      if (j < cells.size() && mr.cells[j].label == mr.cells[run_start].label) continue;
      std::vector<double> mean(original.num_classes(), 0.0);
      for (std::size_t q = run_start; q < j; ++q) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += cells[q].distribution[i];
      }
      joined.push_back(TreeNode::leaf(ClassDistribution::from_counts(mean), 0));
      if (j < cells.size()) joined_thresholds.push_back(mr.thresholds[j - 1]);
      run_start = j;
    }
    if (joined.size() == 1 && mr.cells.front().label == orig_label) continue;
    replacement[r] = interval_subtree(static_cast<int>(kNewFeature), joined_thresholds, joined);
  }
  merged.tree = original.with_replaced_regions(replacement, 2);
  return merged;
}

inline MergedTree merge_adapted(std::span<const AdaptedSolution> solutions, const DecisionTree& original, double threshold) {
  std::vector<std::vector<RegionExtension>> ext;
  ext.reserve(solutions.size());
  for (const auto& s : solutions) ext.push_back(s.extensions);
  return merge_extensions(ext, original, threshold);
}

// ------------------------------------------------------------ pre-labeling

struct UserLabel {
  std::size_t sample = 0;  // index into the adaptation set
  ClassId label = 0;
};

/// Clusters holding user-labelled points get the empirical distribution of
/// those labels as immutable anchors.
inline ClusterLabeling apply_prelabels(const ClusterAssignment& assignment, std::span<const UserLabel> labels,
                                       std::size_t num_classes) {
  std::vector<std::vector<double>> counts(assignment.k, std::vector<double>(num_classes, 0.0));
  for (const UserLabel& ul : labels) {
    if (ul.sample >= assignment.cluster_of.size()) throw Error(ErrorKind::InvalidArgument, "user label index out of range");
    if (ul.label >= num_classes) throw Error(ErrorKind::InvalidArgument, "user label class out of range");
    counts[assignment.cluster_of[ul.sample]][ul.label] += 1.0;
  }
  ClusterLabeling labeling(assignment.k, num_classes);
  for (std::size_t c = 0; c < assignment.k; ++c) {
    const auto d = ClassDistribution::from_counts(counts[c]);
    if (!d.empty()) labeling.set(c, d, Provenance::User);
  }
  return labeling;
}

// --------------------------------------------------------- fault reduction

struct CandidateTest {
  std::size_t disagreements = 0;
  std::size_t correct = 0;
  bool survived = false;
};

struct FaultReductionResult {
  std::vector<std::size_t> survivors;  // candidate indices, preference order kept
  std::vector<CandidateTest> tests;
  std::size_t labels_used = 0;  // distinct stream samples whose label was asked for
};

/// Runs each candidate next to the old tree over the labelled stream and
/// asks for the true label wherever they disagree, up to `n` times. A
/// candidate survives when it is right in at least `criterion` of those
/// cases; one that never disagrees survives as well.
inline FaultReductionResult fault_reduction(const DecisionTree& old_tree, std::span<const DecisionTree* const> candidates,
                                            std::span<const Sample> stream, std::size_t n, double criterion = 0.75) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "fault reduction needs n >= 1");
  FaultReductionResult res;
  std::set<std::size_t> asked;
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    CandidateTest t;
    for (std::size_t i = 0; i < stream.size() && t.disagreements < n; ++i) {
      const Sample& s = stream[i];
      const ClassId new_label = candidates[ci]->classify(s);
      if (old_tree.classify(s) == new_label) continue;
      if (!s.label) throw Error(ErrorKind::InvalidArgument, "stream sample without oracle label");
      asked.insert(i);
      ++t.disagreements;
      if (new_label == *s.label) ++t.correct;
    }
    t.survived = t.disagreements == 0 ||
                 static_cast<double>(t.correct) + 1e-12 >= criterion * static_cast<double>(t.disagreements);
    if (t.survived) res.survivors.push_back(ci);
    res.tests.push_back(t);
  }
  res.labels_used = asked.size();
  return res;
}

struct FaultReductionStats {
  std::size_t a = 0;  // wrong under the old classifier
  std::size_t b = 0;  // wrong under the new classifier
  std::size_t c = 0;  // wrong under both
  long long v = 0;    // a - b
  std::size_t n = 0;
};

inline FaultReductionStats fault_stats(const DecisionTree& old_tree, const DecisionTree& new_tree, const Dataset& labelled,
                                       std::size_t n = 0) {
  FaultReductionStats st;
  st.n = n;
  for (const Sample& s : labelled.samples) {
    if (!s.label) continue;
    const bool w1 = old_tree.classify(s) != *s.label;
    const bool w2 = new_tree.classify(s) != *s.label;
    st.a += w1;
    st.b += w2;
    st.c += w1 && w2;
  }
  st.v = static_cast<long long>(st.a) - static_cast<long long>(st.b);
  return st;
}

/// Probability that the new classifier is right on a random disagreement:
/// (a - c) / ((a - c) + (b - c)).
inline double new_classifier_correct_probability(double a, double b, double c) {
  const double d1 = a - c, d2 = b - c;
  if (!(d1 + d2 > 0.0)) throw Error(ErrorKind::Undefined, "no disagreement instances");
  return d1 / (d1 + d2);
}

/// Chance of accepting the new classifier when it must be right on all n
/// independently drawn disagreements: ((a - c) / (2(a - c) - v))^n.
inline double acceptance_probability(double a, double c, double v, unsigned n) {
  if (c < 0.0 || a < c) throw Error(ErrorKind::InvalidArgument, "need a >= c >= 0");
  if (a == c) throw Error(ErrorKind::Undefined, "identical error sets leave no disagreements to test");
  const double d1 = a - c;
  if (v > d1) throw Error(ErrorKind::InvalidArgument, "improvement v exceeds a - c");
  const double denom = 2.0 * d1 - v;
  if (!(denom > 0.0)) throw Error(ErrorKind::InvalidArgument, "2(a - c) - v must be positive");
  return std::pow(d1 / denom, static_cast<double>(n));
}

}  // namespace selfadapt
