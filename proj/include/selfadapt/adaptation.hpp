#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "selfadapt/clustering.hpp"
#include "selfadapt/dataset.hpp"
#include "selfadapt/decision_tree.hpp"
#include "selfadapt/distribution.hpp"

namespace selfadapt {

// Adaptation points carry [base feature, new feature]; the original
// classifier only ever reads the base feature.
inline constexpr std::size_t kBaseFeature = 0;
inline constexpr std::size_t kNewFeature = 1;

enum class Provenance { Inferred, Similarity, User };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Inferred: return "inferred";
    case Provenance::Similarity: return "similarity";
    case Provenance::User: return "user";
  }
  return "?";
}

struct ClusterLabel {
  ClassDistribution distribution;
  Provenance provenance = Provenance::Inferred;
};

/// Partial map cluster id -> class distribution.
class ClusterLabeling {
 public:
  ClusterLabeling() = default;
  ClusterLabeling(std::size_t num_clusters, std::size_t num_classes)
      : labels_(num_clusters), num_classes_(num_classes) {}

  std::size_t num_clusters() const noexcept { return labels_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }

  bool is_labeled(std::size_t c) const { return labels_.at(c).has_value(); }
  const std::optional<ClusterLabel>& operator[](std::size_t c) const { return labels_.at(c); }

  void set(std::size_t c, ClassDistribution dist, Provenance provenance) {
    if (dist.size() != num_classes_) throw Error(ErrorKind::DimensionMismatch, "label distribution size");
    labels_.at(c) = ClusterLabel{std::move(dist), provenance};
  }

  void clear(std::size_t c) { labels_.at(c).reset(); }

  std::size_t labeled_count() const {
    return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](const auto& l) { return l.has_value(); }));
  }

  bool all_labeled(std::span<const std::size_t> clusters) const {
    return std::all_of(clusters.begin(), clusters.end(), [&](std::size_t c) { return is_labeled(c); });
  }

 private:
  std::vector<std::optional<ClusterLabel>> labels_;
  std::size_t num_classes_ = 0;
};

/// 1D tree over the base feature whose targets are cluster ids.
struct ClusterMembershipTree {
  DecisionTree tree;
};

struct RegionKind {
  bool single = false;
  /// The owning cluster for single-cluster regions, otherwise every cluster
  /// present in the leaf.
  std::vector<std::size_t> clusters;
};

inline ClusterMembershipTree build_cluster_tree(std::span<const Sample> adapt_points, const ClusterAssignment& assignment,
                                                std::size_t min_leaf) {
  if (assignment.cluster_of.size() != adapt_points.size()) {
    throw Error(ErrorKind::DimensionMismatch, "assignment does not cover the adaptation points");
  }
  return {train_on_targets(adapt_points, assignment.cluster_of, assignment.k, {kBaseFeature}, min_leaf, 1)};
}

inline std::vector<RegionKind> classify_regions(const ClusterMembershipTree& cmt, double purity_threshold) {
  if (!(purity_threshold > 0.5 && purity_threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "purity threshold must lie in (0.5, 1]");
  }
  std::vector<RegionKind> kinds(cmt.tree.num_regions());
  for (std::size_t r = 0; r < kinds.size(); ++r) {
    const ClassDistribution& dist = cmt.tree.leaf_distribution(r);
    if (dist.max() + 1e-12 >= purity_threshold) {
      kinds[r] = {true, {dist.argmax()}};
    } else {
      for (std::size_t c = 0; c < dist.size(); ++c) {
        if (dist[c] > 0.0) kinds[r].clusters.push_back(c);
      }
    }
  }
  return kinds;
}

/// Per cluster: class counts of the original training samples that fall into
/// that cluster's single-cluster regions.
inline std::vector<std::vector<double>> single_region_class_counts(const ClusterMembershipTree& cmt,
                                                                   std::span<const RegionKind> kinds,
                                                                   const Dataset& train_1d, std::size_t num_clusters) {
  std::vector<std::vector<double>> counts(num_clusters, std::vector<double>(train_1d.num_classes, 0.0));
  for (const Sample& s : train_1d.samples) {
    if (!s.label) continue;
    const RegionKind& kind = kinds[cmt.tree.region_of(s)];
    if (kind.single) counts[kind.clusters.front()][*s.label] += 1.0;
  }
  return counts;
}

/// Transfers the class distribution found in single-cluster regions to their
/// clusters. Clusters already labelled in `anchors` keep their labels.
inline ClusterLabeling infer_labels(const ClusterMembershipTree& cmt, std::span<const RegionKind> kinds,
                                    const Dataset& train_1d, const std::optional<ClusterLabeling>& anchors = std::nullopt) {
  const std::size_t k = cmt.tree.num_classes();
  ClusterLabeling labeling = anchors ? *anchors : ClusterLabeling(k, train_1d.num_classes);
  const auto counts = single_region_class_counts(cmt, kinds, train_1d, k);
  for (std::size_t c = 0; c < k; ++c) {
    if (labeling.is_labeled(c)) continue;
    const auto dist = ClassDistribution::from_counts(counts[c]);
    if (!dist.empty()) labeling.set(c, dist, Provenance::Inferred);
  }
  return labeling;
}

/// Split of one original region along the new feature. An empty threshold
/// list means the region is left as it was.
struct RegionExtension {
  std::vector<double> thresholds;
  std::vector<TreeNode> cells;

  bool extended() const noexcept { return !thresholds.empty(); }
};

struct Extension {
  DecisionTree tree_2d;
  std::vector<RegionExtension> regions;

  std::size_t extended_count() const {
    return static_cast<std::size_t>(
        std::count_if(regions.begin(), regions.end(), [](const RegionExtension& r) { return r.extended(); }));
  }
};

/// Adaptation points grouped by the original-tree region they project onto.
inline std::vector<std::vector<std::size_t>> points_by_region(const DecisionTree& tree_1d,
                                                              std::span<const Sample> adapt_points) {
  std::vector<std::vector<std::size_t>> out(tree_1d.num_regions());
  for (std::size_t i = 0; i < adapt_points.size(); ++i) out[tree_1d.region_of(adapt_points[i])].push_back(i);
  return out;
}

inline std::vector<std::vector<std::size_t>> clusters_by_region(const DecisionTree& tree_1d,
                                                                std::span<const Sample> adapt_points,
                                                                const ClusterAssignment& assignment) {
  const auto by_region = points_by_region(tree_1d, adapt_points);
  std::vector<std::vector<std::size_t>> out(by_region.size());
  for (std::size_t r = 0; r < by_region.size(); ++r) {
    std::set<std::size_t> present;
    for (std::size_t i : by_region[r]) present.insert(assignment.cluster_of[i]);
    out[r].assign(present.begin(), present.end());
  }
  return out;
}

/// Replaces each multi-cluster region whose clusters are all labelled by a
/// subtree on the new feature that separates cluster membership. Each new
/// leaf takes the distribution of its majority cluster.
inline Extension extend_tree(const DecisionTree& tree_1d, std::span<const Sample> adapt_points,
                             const ClusterAssignment& assignment, const ClusterLabeling& labeling, std::size_t min_leaf) {
  const auto by_region = points_by_region(tree_1d, adapt_points);
  Extension ext;
  ext.regions.resize(tree_1d.num_regions());
  std::vector<std::optional<std::vector<TreeNode>>> replacement(tree_1d.num_regions());

  for (std::size_t r = 0; r < by_region.size(); ++r) {
    const auto& idx = by_region[r];
    std::set<std::size_t> present;
    for (std::size_t i : idx) present.insert(assignment.cluster_of[i]);
    if (present.size() < 2) continue;
    const std::vector<std::size_t> clusters(present.begin(), present.end());
    if (!labeling.all_labeled(clusters)) continue;

    std::vector<Sample> local;
    std::vector<ClassId> targets;
    local.reserve(idx.size());
    for (std::size_t i : idx) {
      local.push_back(adapt_points[i]);
      targets.push_back(assignment.cluster_of[i]);
    }
    const DecisionTree sub = train_on_targets(local, targets, assignment.k, {kNewFeature}, min_leaf, 2);
    if (sub.num_regions() < 2) continue;

    std::vector<TreeNode> nodes = sub.nodes();
    RegionExtension& re = ext.regions[r];
    for (std::size_t leaf = 0; leaf < sub.num_regions(); ++leaf) {
      const std::size_t majority = sub.leaf_distribution(leaf).argmax();
      TreeNode cell = TreeNode::leaf((*labeling[majority]).distribution, sub.region(leaf).train_count);
      re.cells.push_back(cell);
    }
    // Leaves of a single-axis tree read left to right are the cells in
    // ascending order; patch the copied nodes with the cell distributions.
    for (TreeNode& n : nodes) {
      if (n.is_leaf()) {
        const std::size_t leaf = n.region;
        n.distribution = re.cells[leaf].distribution;
      } else {
        re.thresholds.push_back(n.threshold);
      }
    }
    std::sort(re.thresholds.begin(), re.thresholds.end());
    replacement[r] = std::move(nodes);
  }
  ext.tree_2d = tree_1d.with_replaced_regions(replacement, 2);
  return ext;
}

}  // namespace selfadapt
