#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "selfadapt/dataset.hpp"
#include "selfadapt/distribution.hpp"
#include "selfadapt/error.hpp"

namespace selfadapt {

/// Flat node storage; children are indices into the owning tree's node list.
/// Leaves have `feature < 0` and carry the class distribution they retain
/// from training.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t region = 0;
  ClassDistribution distribution;
  std::size_t train_count = 0;

  bool is_leaf() const noexcept { return feature < 0; }

  static TreeNode leaf(ClassDistribution dist, std::size_t count) {
    TreeNode n;
    n.distribution = std::move(dist);
    n.train_count = count;
    return n;
  }
};

/// Binary axis-aligned tree. Values `<= threshold` go left. Region ids are
/// dense and follow the left-to-right order of the leaves.
class DecisionTree {
 public:
  DecisionTree() = default;

  DecisionTree(std::vector<TreeNode> nodes, std::size_t num_classes, std::size_t min_leaf, std::size_t feature_count)
      : nodes_(std::move(nodes)), num_classes_(num_classes), min_leaf_(min_leaf), feature_count_(feature_count) {
    if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "tree without nodes");
    index_regions(0);
  }

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t min_leaf() const noexcept { return min_leaf_; }
  std::size_t feature_count() const noexcept { return feature_count_; }
  std::size_t num_regions() const noexcept { return leaves_.size(); }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

  const TreeNode& region(std::size_t r) const { return nodes_.at(static_cast<std::size_t>(leaves_.at(r))); }
  const ClassDistribution& leaf_distribution(std::size_t r) const { return region(r).distribution; }

  std::size_t region_of(std::span<const double> x) const { return nodes_[static_cast<std::size_t>(leaf_index(x))].region; }
  std::size_t region_of(const Sample& s) const { return region_of(std::span<const double>(s.features)); }

  ClassId classify(std::span<const double> x) const {
    return nodes_[static_cast<std::size_t>(leaf_index(x))].distribution.argmax();
  }
  ClassId classify(const Sample& s) const { return classify(std::span<const double>(s.features)); }

  double accuracy(const Dataset& d) const {
    if (d.empty()) return 0.0;
    std::size_t correct = 0;
    for (const Sample& s : d.samples) {
      if (s.label && classify(s) == *s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(d.size());
  }

  std::size_t depth() const { return depth_from(0); }

  /// Returns a copy in which region `r` is replaced by `replacement[r]` when
  /// that entry holds a subtree (root at index 0, child indices local).
  DecisionTree with_replaced_regions(const std::vector<std::optional<std::vector<TreeNode>>>& replacement,
                                     std::size_t feature_count) const {
    std::vector<TreeNode> out;
    out.reserve(nodes_.size());
    copy_with_replacements(0, replacement, out);
    return DecisionTree(std::move(out), num_classes_, min_leaf_, std::max(feature_count, feature_count_));
  }

 private:
  int leaf_index(std::span<const double> x) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return i;
  }

  void index_regions(int i) {
    TreeNode& n = nodes_.at(static_cast<std::size_t>(i));
    if (n.is_leaf()) {
      n.region = leaves_.size();
      leaves_.push_back(i);
      return;
    }
    index_regions(n.left);
    index_regions(n.right);
  }

  std::size_t depth_from(int i) const {
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  static int append_subtree(const std::vector<TreeNode>& sub, int i, std::vector<TreeNode>& out) {
    const int at = static_cast<int>(out.size());
    out.push_back(sub.at(static_cast<std::size_t>(i)));
    if (!out.back().is_leaf()) {
      const int l = append_subtree(sub, sub[static_cast<std::size_t>(i)].left, out);
      const int r = append_subtree(sub, sub[static_cast<std::size_t>(i)].right, out);
      out[static_cast<std::size_t>(at)].left = l;
      out[static_cast<std::size_t>(at)].right = r;
    }
    return at;
  }

  int copy_with_replacements(int i, const std::vector<std::optional<std::vector<TreeNode>>>& replacement,
                             std::vector<TreeNode>& out) const {
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      if (n.region < replacement.size() && replacement[n.region]) return append_subtree(*replacement[n.region], 0, out);
      out.push_back(n);
      return static_cast<int>(out.size()) - 1;
    }
    const int at = static_cast<int>(out.size());
    out.push_back(n);
    const int l = copy_with_replacements(n.left, replacement, out);
    const int r = copy_with_replacements(n.right, replacement, out);
    out[static_cast<std::size_t>(at)].left = l;
    out[static_cast<std::size_t>(at)].right = r;
    return at;
  }

  std::vector<TreeNode> nodes_;
  std::vector<int> leaves_;
  std::size_t num_classes_ = 0;
  std::size_t min_leaf_ = 1;
  std::size_t feature_count_ = 0;
};

namespace detail {

inline double entropy(std::span<const double> counts, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  double ratio = 0.0;
};

/// C4.5-style tree growth on an arbitrary target labelling. Used for class
/// trees, cluster-membership trees and single-axis extension subtrees.
class TreeGrower {
 public:
  TreeGrower(std::span<const Sample> samples, std::span<const ClassId> targets, std::size_t num_targets,
             std::vector<std::size_t> features, std::size_t min_leaf)
      : samples_(samples), targets_(targets), num_targets_(num_targets), features_(std::move(features)),
        min_leaf_(std::max<std::size_t>(min_leaf, 1)) {}

  std::vector<TreeNode> grow() {
    std::vector<std::size_t> idx(samples_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    nodes_.clear();
    build(idx);
    return std::move(nodes_);
  }

 private:
  static constexpr double kMinGain = 1e-12;

  std::vector<double> count_targets(std::span<const std::size_t> idx) const {
    std::vector<double> counts(num_targets_, 0.0);
    for (std::size_t i : idx) counts[targets_[i]] += 1.0;
    return counts;
  }

  int build(std::vector<std::size_t>& idx) {
    const auto counts = count_targets(idx);
    const int at = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode::leaf(ClassDistribution::from_counts(counts), idx.size()));

    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
    if (pure || idx.size() < 2 * min_leaf_) return at;

    const auto best = best_split(idx, counts);
    if (!best) return at;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (samples_[i].features[static_cast<std::size_t>(best->feature)] <= best->threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(left);
    const int r = build(right);
    TreeNode& node = nodes_[static_cast<std::size_t>(at)];
    node.feature = best->feature;
    node.threshold = best->threshold;
    node.left = l;
    node.right = r;
    return at;
  }

  // Candidate thresholds sit at midpoints of consecutive distinct values and
  // must leave at least min_leaf samples on both sides. Among candidates with
  // positive gain, only those at least as good as the average gain compete on
  // gain ratio (the usual C4.5 guard against lopsided splits).
  std::optional<SplitCandidate> best_split(std::span<const std::size_t> idx, const std::vector<double>& counts) const {
    const double n = static_cast<double>(idx.size());
    const double parent_h = entropy(counts, n);
    std::vector<SplitCandidate> candidates;
    std::vector<std::size_t> order(idx.begin(), idx.end());
    std::vector<double> left(num_targets_), right(num_targets_);

    for (std::size_t f : features_) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return samples_[a].features[f] < samples_[b].features[f]; });
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const ClassId t = targets_[order[k]];
        left[t] += 1.0;
        right[t] -= 1.0;
        const double lo = samples_[order[k]].features[f];
        const double hi = samples_[order[k + 1]].features[f];
        if (!(lo < hi)) continue;
        const std::size_t nl = k + 1;
        const std::size_t nr = order.size() - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double wl = static_cast<double>(nl) / n;
        const double wr = static_cast<double>(nr) / n;
        const double gain =
            parent_h - wl * entropy(left, static_cast<double>(nl)) - wr * entropy(right, static_cast<double>(nr));
        if (gain <= kMinGain) continue;
        const double split_info = -wl * std::log2(wl) - wr * std::log2(wr);
        double threshold = 0.5 * (lo + hi);
        if (!(threshold < hi)) threshold = lo;
        candidates.push_back({static_cast<int>(f), threshold, gain, split_info > 0.0 ? gain / split_info : gain});
      }
    }
    if (candidates.empty()) return std::nullopt;

    double mean_gain = 0.0;
    for (const auto& c : candidates) mean_gain += c.gain;
    mean_gain /= static_cast<double>(candidates.size());

    std::optional<SplitCandidate> best;
    for (const auto& c : candidates) {
      if (c.gain + 1e-12 < mean_gain) continue;
      if (!best || c.ratio > best->ratio) best = c;
    }
    return best;
  }

  std::span<const Sample> samples_;
  std::span<const ClassId> targets_;
  std::size_t num_targets_;
  std::vector<std::size_t> features_;
  std::size_t min_leaf_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Grows a tree over `features` predicting `targets` (one per sample).
inline DecisionTree train_on_targets(std::span<const Sample> samples, std::span<const ClassId> targets,
                                     std::size_t num_targets, std::vector<std::size_t> features, std::size_t min_leaf,
                                     std::size_t feature_count) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "cannot train a tree on an empty dataset");
  if (targets.size() != samples.size()) throw Error(ErrorKind::DimensionMismatch, "targets do not match samples");
  if (min_leaf == 0) throw Error(ErrorKind::InvalidArgument, "min_leaf must be at least 1");
  for (ClassId t : targets) {
    if (t >= num_targets) throw Error(ErrorKind::InvalidArgument, "target id out of range");
  }
  detail::TreeGrower grower(samples, targets, num_targets, std::move(features), min_leaf);
  return DecisionTree(grower.grow(), num_targets, min_leaf, feature_count);
}

/// Trains on every feature of a fully labelled dataset.
inline DecisionTree train(const Dataset& d, std::size_t min_leaf) {
  if (d.empty()) throw Error(ErrorKind::EmptyInput, "cannot train a tree on an empty dataset");
  const auto labels = d.labels();
  std::size_t num_classes = d.num_classes;
  for (ClassId c : labels) num_classes = std::max(num_classes, c + 1);
  std::vector<std::size_t> features(d.feature_count());
  std::iota(features.begin(), features.end(), std::size_t{0});
  return train_on_targets(d.samples, labels, num_classes, std::move(features), min_leaf, d.feature_count());
}

enum class MinLeafSelection {
  /// Accuracy of each tree on the data it was trained on.
  TrainingAccuracy,
  /// Mean held-out accuracy over folds of the training data.
  CrossValidation,
};

/// Held-out accuracy of `min_leaf` over `folds` interleaved folds
/// (sample i belongs to fold i % folds).
inline double cross_validated_accuracy(const Dataset& d, std::size_t min_leaf, std::size_t folds) {
  folds = std::min(folds, d.size());
  if (folds < 2) return train(d, min_leaf).accuracy(d);
  std::size_t correct = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> fit, held;
    for (std::size_t i = 0; i < d.size(); ++i) (i % folds == f ? held : fit).push_back(i);
    const DecisionTree t = train(d.subset(fit), min_leaf);
    for (std::size_t i : held) correct += t.classify(d.samples[i]) == *d.samples[i].label;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

/// Picks the min-leaf value whose tree scores best on the training data;
/// ties go to the smallest value.
inline std::size_t select_min_leaf(const Dataset& train_set, std::vector<std::size_t> candidates,
                                   MinLeafSelection mode = MinLeafSelection::TrainingAccuracy, std::size_t folds = 5) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no min_leaf candidates");
  std::sort(candidates.begin(), candidates.end());
  std::size_t best = candidates.front();
  double best_acc = -1.0;
  for (std::size_t b : candidates) {
    const double acc = mode == MinLeafSelection::TrainingAccuracy ? train(train_set, b).accuracy(train_set)
                                                                  : cross_validated_accuracy(train_set, b, folds);
    if (acc > best_acc) {
      best_acc = acc;
      best = b;
    }
  }
  return best;
}

/// Builds a balanced single-feature subtree from an interval partition:
/// `thresholds` ascending, `cells.size() == thresholds.size() + 1`.
inline std::vector<TreeNode> interval_subtree(int feature, std::span<const double> thresholds,
                                              std::span<const TreeNode> cells) {
  if (cells.size() != thresholds.size() + 1) throw Error(ErrorKind::DimensionMismatch, "cells vs thresholds");
  std::vector<TreeNode> out;
  auto build = [&](auto&& self, std::size_t lo, std::size_t hi) -> int {  // cells [lo, hi]
    const int at = static_cast<int>(out.size());
    if (lo == hi) {
      out.push_back(cells[lo]);
      out.back().feature = -1;
      return at;
    }
    const std::size_t mid = lo + (hi - lo) / 2;  // split after cell `mid`
    TreeNode node;
    node.feature = feature;
    node.threshold = thresholds[mid];
    out.push_back(node);
    const int l = self(self, lo, mid);
    const int r = self(self, mid + 1, hi);
    out[static_cast<std::size_t>(at)].left = l;
    out[static_cast<std::size_t>(at)].right = r;
    return at;
  };
  build(build, 0, cells.size() - 1);
  return out;
}

}  // namespace selfadapt
