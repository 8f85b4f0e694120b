#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "selfadapt/adaptation.hpp"
#include "selfadapt/clustering.hpp"
#include "selfadapt/decision_tree.hpp"
#include "selfadapt/quality.hpp"

namespace selfadapt {

/// What one original-tree region sees of the clustering: its training
/// distribution, its training weight and how many adaptation points each
/// cluster projects onto it.
struct RegionProjection {
  std::size_t region = 0;
  ClassDistribution p;
  double weight = 0.0;
  std::vector<std::pair<std::size_t, double>> cluster_mass;  // ascending cluster id
  double total = 0.0;
};

/// Regions that receive at least one adaptation point, in region order.
inline std::vector<RegionProjection> project_regions(const DecisionTree& tree_1d, std::span<const Sample> adapt_points,
                                                     const ClusterAssignment& assignment) {
  const std::size_t nr = tree_1d.num_regions();
  std::vector<std::map<std::size_t, double>> mass(nr);
  for (std::size_t i = 0; i < adapt_points.size(); ++i) mass[tree_1d.region_of(adapt_points[i])][assignment.cluster_of[i]] += 1.0;
  double total_train = 0.0;
  for (std::size_t r = 0; r < nr; ++r) total_train += static_cast<double>(tree_1d.region(r).train_count);

  std::vector<RegionProjection> out;
  for (std::size_t r = 0; r < nr; ++r) {
    if (mass[r].empty()) continue;
    RegionProjection rp;
    rp.region = r;
    rp.p = tree_1d.leaf_distribution(r);
    rp.weight = total_train > 0.0 ? static_cast<double>(tree_1d.region(r).train_count) / total_train : 0.0;
    for (const auto& [c, m] : mass[r]) {
      rp.cluster_mass.emplace_back(c, m);
      rp.total += m;
    }
    out.push_back(std::move(rp));
  }
  return out;
}

struct DependencyGraph {
  std::size_t num_clusters = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // a < b, sorted
  std::vector<std::vector<std::size_t>> components;        // ordered by smallest member
  std::vector<std::size_t> component_of;

  bool has_edge(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b));
  }
};

/// Clusters are linked when they project onto a common original region.
inline DependencyGraph build_graph(std::span<const RegionProjection> regions, std::size_t num_clusters) {
  DependencyGraph g;
  g.num_clusters = num_clusters;
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> parent(num_clusters);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& rp : regions) {
    for (std::size_t i = 0; i < rp.cluster_mass.size(); ++i) {
      for (std::size_t j = i + 1; j < rp.cluster_mass.size(); ++j) {
        const std::size_t a = rp.cluster_mass[i].first, b = rp.cluster_mass[j].first;
        edges.emplace(std::min(a, b), std::max(a, b));
        parent[find(a)] = find(b);
      }
    }
  }
  g.edges.assign(edges.begin(), edges.end());
  g.component_of.assign(num_clusters, 0);
  std::map<std::size_t, std::size_t> root_to_comp;
  for (std::size_t c = 0; c < num_clusters; ++c) {
    auto [it, inserted] = root_to_comp.try_emplace(find(c), g.components.size());
    if (inserted) g.components.emplace_back();
    g.components[it->second].push_back(c);
    g.component_of[c] = it->second;
  }
  return g;
}

inline DependencyGraph build_graph(const DecisionTree& tree_1d, std::span<const Sample> adapt_points,
                                   const ClusterAssignment& assignment) {
  return build_graph(project_regions(tree_1d, adapt_points, assignment), assignment.k);
}

/// Fraction of region mass below which a residual counts as empty.
inline constexpr double kResidualEpsilon = 0.01;

/// Clipped, unnormalized residual: max(0, p_i * M - labeled_i).
inline std::vector<double> residual_mass(const ClassDistribution& p_r, double total_mass,
                                         std::span<const double> labeled_mass) {
  if (labeled_mass.size() != p_r.size()) throw Error(ErrorKind::DimensionMismatch, "labeled mass vs class count");
  std::vector<double> out(p_r.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, p_r[i] * total_mass - labeled_mass[i]);
  return out;
}

/// Class distribution of the single unlabelled cluster in a region: what the
/// training distribution still expects after the labelled clusters' mass is
/// subtracted.
inline ClassDistribution residual_label(const ClassDistribution& p_r, double total_mass, std::span<const double> labeled_mass,
                                        std::size_t unlabeled_clusters = 1, double epsilon = kResidualEpsilon) {
  if (unlabeled_clusters != 1) {
    throw Error(ErrorKind::AmbiguousRegion, std::to_string(unlabeled_clusters) + " unlabeled clusters in region");
  }
  const auto res = residual_mass(p_r, total_mass, labeled_mass);
  const double sum = std::accumulate(res.begin(), res.end(), 0.0);
  if (!(sum >= epsilon * total_mass) || sum <= 0.0) throw Error(ErrorKind::NoResidualMass, "residual below threshold");
  return ClassDistribution::from_counts(res);
}

inline std::vector<double> labeled_class_mass(const RegionProjection& rp, const ClusterLabeling& labeling) {
  std::vector<double> mass(labeling.num_classes(), 0.0);
  for (const auto& [c, m] : rp.cluster_mass) {
    if (!labeling.is_labeled(c)) continue;
    const auto& dist = labeling[c]->distribution;
    for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += m * dist[i];
  }
  return mass;
}

struct PropagationOptions {
  /// Visiting order over `regions` (indices into that span); empty = natural.
  std::vector<std::size_t> order;
  double epsilon = kResidualEpsilon;
  std::size_t max_rounds = std::numeric_limits<std::size_t>::max();
};

/// Labels clusters that are the only unlabelled cluster of some region, round
/// by round, until a round labels nothing. Within a round all regions read
/// the same labelling and a cluster pools the residuals of all regions where
/// it is alone, so the fixpoint does not depend on the visiting order.
/// Already-labelled clusters are never touched.
inline ClusterLabeling propagate(std::span<const RegionProjection> regions, ClusterLabeling labeling,
                                 const PropagationOptions& opts = {}) {
  std::vector<std::size_t> order = opts.order;
  if (order.empty()) {
    order.resize(regions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  struct Contribution {
    std::size_t cluster;
    std::vector<double> residual;
    double mass;
  };
  for (std::size_t round = 0; round < opts.max_rounds; ++round) {
    std::vector<std::optional<Contribution>> slot(regions.size());
    for (std::size_t ri : order) {
      const RegionProjection& rp = regions[ri];
      std::optional<std::size_t> lone;
      std::size_t unlabeled = 0;
      for (const auto& [c, m] : rp.cluster_mass) {
        if (!labeling.is_labeled(c)) {
          ++unlabeled;
          lone = c;
        }
      }
      if (unlabeled != 1) continue;
      slot[ri] = Contribution{*lone, residual_mass(rp.p, rp.total, labeled_class_mass(rp, labeling)), rp.total};
    }

    std::map<std::size_t, std::pair<std::vector<double>, double>> pooled;
    for (const auto& s : slot) {
      if (!s) continue;
      auto& [vec, mass] = pooled[s->cluster];
      if (vec.empty()) vec.assign(s->residual.size(), 0.0);
      for (std::size_t i = 0; i < vec.size(); ++i) vec[i] += s->residual[i];
      mass += s->mass;
    }
    bool changed = false;
    for (const auto& [c, pm] : pooled) {
      const double sum = std::accumulate(pm.first.begin(), pm.first.end(), 0.0);
      if (sum > 0.0 && sum >= opts.epsilon * pm.second) {
        labeling.set(c, ClassDistribution::from_counts(pm.first), Provenance::Similarity);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return labeling;
}

/// Training-weighted implausibility of a complete labelling over the given
/// regions, using each cluster's projected mass as its share of the region.
inline double group_implausibility(std::span<const RegionProjection> regions, std::span<const std::size_t> region_idx,
                                   const ClusterLabeling& labeling) {
  double wsum = 0.0, acc = 0.0;
  for (std::size_t ri : region_idx) {
    const RegionProjection& rp = regions[ri];
    const auto mass = labeled_class_mass(rp, labeling);
    const double w = rp.weight > 0.0 ? rp.weight : 1e-12;
    acc += w * plausibility(rp.p, ClassDistribution::from_counts(mass));
    wsum += w;
  }
  return wsum > 0.0 ? acc / wsum : 0.0;
}

struct GroupSearchResult {
  std::vector<std::size_t> clusters;  // the unlabelled clusters searched
  std::vector<ClassId> classes;       // chosen pure class per cluster
  double implausibility = 0.0;
  std::size_t candidates = 0;
  bool skipped = false;  // candidate count exceeded the cap
};

inline constexpr std::size_t kDefaultSearchCap = 10000;

/// Tries every assignment of one pure class per unlabelled cluster of
/// `group` and keeps the least implausible one. Candidates are enumerated
/// lexicographically with the lowest cluster id as the most significant
/// digit; the first of equally good candidates wins.
inline GroupSearchResult exhaustive_group_search(std::span<const std::size_t> group,
                                                 std::span<const RegionProjection> regions,
                                                 const ClusterLabeling& labeling,
                                                 std::size_t search_cap = kDefaultSearchCap) {
  GroupSearchResult res;
  for (std::size_t c : group) {
    if (!labeling.is_labeled(c)) res.clusters.push_back(c);
  }
  std::sort(res.clusters.begin(), res.clusters.end());
  if (res.clusters.empty()) return res;

  const std::size_t n_classes = labeling.num_classes();
  std::size_t total = 1;
  for (std::size_t i = 0; i < res.clusters.size(); ++i) {
    if (n_classes != 0 && total > search_cap / n_classes) {
      res.skipped = true;
      return res;
    }
    total *= n_classes;
  }
  if (total > search_cap || total == 0) {
    res.skipped = true;
    return res;
  }

  std::set<std::size_t> members(group.begin(), group.end());
  std::vector<std::size_t> touching;
  for (std::size_t ri = 0; ri < regions.size(); ++ri) {
    for (const auto& [c, m] : regions[ri].cluster_mass) {
      if (members.count(c)) {
        touching.push_back(ri);
        break;
      }
    }
  }

  const std::size_t u = res.clusters.size();
  std::vector<ClassId> digits(u, 0);
  ClusterLabeling trial = labeling;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    for (std::size_t i = u; i-- > 0;) {
      digits[i] = rem % n_classes;
      rem /= n_classes;
    }
    for (std::size_t i = 0; i < u; ++i) {
      trial.set(res.clusters[i], ClassDistribution::point_mass(n_classes, digits[i]), Provenance::Similarity);
    }
    const double score = group_implausibility(regions, touching, trial);
    ++res.candidates;
    if (score < best) {
      best = score;
      res.classes = digits;
    }
  }
  res.implausibility = best;
  return res;
}

struct SimilarityOptions {
  bool exhaustive = true;
  std::size_t search_cap = kDefaultSearchCap;
  PropagationOptions propagation;
};

/// Propagation first; groups that still hold unlabelled clusters afterwards
/// are searched exhaustively.
inline ClusterLabeling similarity_search(std::span<const RegionProjection> regions, std::size_t num_clusters,
                                        ClusterLabeling labeling, const SimilarityOptions& opts = {}) {
  labeling = propagate(regions, std::move(labeling), opts.propagation);
  if (!opts.exhaustive) return labeling;
  const DependencyGraph graph = build_graph(regions, num_clusters);
  for (const auto& group : graph.components) {
    const auto res = exhaustive_group_search(group, regions, labeling, opts.search_cap);
    if (res.skipped || res.clusters.empty()) continue;
    for (std::size_t i = 0; i < res.clusters.size(); ++i) {
      labeling.set(res.clusters[i], ClassDistribution::point_mass(labeling.num_classes(), res.classes[i]),
                   Provenance::Similarity);
    }
  }
  return labeling;
}

}  // namespace selfadapt
