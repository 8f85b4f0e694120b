#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "selfadapt/adaptation.hpp"
#include "selfadapt/clustering.hpp"
#include "selfadapt/dataset.hpp"
#include "selfadapt/decision_tree.hpp"
#include "selfadapt/robustness.hpp"
#include "selfadapt/similarity_search.hpp"
#include "selfadapt/solution.hpp"

namespace selfadapt {

struct FaultReductionConfig {
  std::size_t n_disagreements = 4;
  double criterion = 0.75;
  std::size_t top_k = 3;
};

struct PipelineConfig {
  std::size_t cluster_min_leaf = 2;
  double purity_threshold = 0.95;
  double pl_threshold = 0.075;
  /// 0 selects min(4 * classes, 16, n).
  std::size_t k_max = 0;
  Linkage linkage = Linkage::Ward;
  bool similarity_search = true;
  std::size_t search_cap = kDefaultSearchCap;
  std::optional<BaggingConfig> bagging;
  std::size_t prelabel_count = 0;
  std::optional<FaultReductionConfig> fault_reduction;
  std::vector<std::size_t> min_leaf_grid{2, 5, 10, 25, 50};
  MinLeafSelection min_leaf_selection = MinLeafSelection::CrossValidation;
  std::uint64_t seed = 1;
  /// Discard a bagged solution when more than this share of its contested
  /// adaptation points fell back to the original label.
  double max_reverted_fraction = 0.5;
};

inline void validate(const PipelineConfig& cfg) {
  if (cfg.cluster_min_leaf == 0) throw Error(ErrorKind::Config, "cluster_min_leaf must be >= 1");
  if (!(cfg.purity_threshold > 0.5 && cfg.purity_threshold <= 1.0)) throw Error(ErrorKind::Config, "purity_threshold in (0.5, 1]");
  if (!(cfg.pl_threshold >= 0.0 && cfg.pl_threshold <= 1.0)) throw Error(ErrorKind::Config, "pl_threshold in [0, 1]");
  if (cfg.min_leaf_grid.empty()) throw Error(ErrorKind::Config, "min_leaf_grid must not be empty");
  if (std::find(cfg.min_leaf_grid.begin(), cfg.min_leaf_grid.end(), std::size_t{0}) != cfg.min_leaf_grid.end()) {
    throw Error(ErrorKind::Config, "min_leaf_grid values must be >= 1");
  }
  if (cfg.bagging) validate(*cfg.bagging);
  if (cfg.fault_reduction) {
    if (cfg.fault_reduction->top_k == 0) throw Error(ErrorKind::Config, "fault_reduction.top_k must be >= 1");
    if (cfg.fault_reduction->n_disagreements == 0) throw Error(ErrorKind::Config, "fault_reduction.n must be >= 1");
  }
}

inline std::size_t effective_k_max(const PipelineConfig& cfg, std::size_t num_classes, std::size_t n) {
  const std::size_t k = cfg.k_max != 0 ? cfg.k_max : std::min<std::size_t>(4 * num_classes, 16);
  return std::min(k, n);
}

/// Labelling state of one dendrogram cut, kept for inspection.
struct CutTrace {
  ClusterAssignment assignment;
  ClusterLabeling inferred;  // after anchors + single-region inference
  ClusterLabeling final;     // after similarity search
};

/// One candidate solution per dendrogram cut k = 2..K_max.
inline std::vector<AdaptedSolution> adapt_candidates(const DecisionTree& tree_1d, const Dataset& train_set,
                                                     std::span<const Sample> adapt_points,
                                                     std::span<const UserLabel> user_labels, const PipelineConfig& cfg,
                                                     std::vector<CutTrace>* trace = nullptr) {
  std::vector<AdaptedSolution> out;
  if (adapt_points.size() < 2) return out;
  std::vector<std::vector<double>> pts;
  pts.reserve(adapt_points.size());
  for (const Sample& s : adapt_points) pts.push_back(s.features);
  const Dendrogram dg = agglomerate(pts, cfg.linkage);
  const std::size_t num_classes = tree_1d.num_classes();

  for (std::size_t k = 2; k <= effective_k_max(cfg, num_classes, adapt_points.size()); ++k) {
    const ClusterAssignment assignment = cut(dg, k);
    const ClusterLabeling anchors = apply_prelabels(assignment, user_labels, num_classes);
    const auto cmt = build_cluster_tree(adapt_points, assignment, cfg.cluster_min_leaf);
    const auto kinds = classify_regions(cmt, cfg.purity_threshold);
    ClusterLabeling labeling = infer_labels(cmt, kinds, train_set, anchors);
    ClusterLabeling inferred = labeling;
    if (cfg.similarity_search) {
      const auto regions = project_regions(tree_1d, adapt_points, assignment);
      SimilarityOptions so;
      so.search_cap = cfg.search_cap;
      labeling = similarity_search(regions, k, std::move(labeling), so);
    }
    if (trace) trace->push_back({assignment, inferred, labeling});
    out.push_back(make_solution(tree_1d, adapt_points, assignment, std::move(labeling), cfg.cluster_min_leaf));
  }
  return out;
}

/// Per-shuffle evaluation record.
struct ShuffleRecord {
  std::uint64_t seed = 0;
  double acc_1d = 0.0;
  double acc_2d_supervised = 0.0;
  double acc_adapted = 0.0;
  double accuracy_change = 0.0;
  std::size_t labels_used = 0;
  std::size_t k = 0;
  double plausibility = 0.0;
  double gain = 0.0;
  bool fallback = true;
  std::size_t base_min_leaf = 0;
  std::size_t extended_regions = 0;
  std::size_t candidates = 0;

  friend bool operator==(const ShuffleRecord&, const ShuffleRecord&) = default;
};

struct PipelineOutcome {
  DecisionTree tree_1d;
  DecisionTree final_tree;
  DecisionTree supervised_2d;
  std::optional<AdaptedSolution> solution;
  ShuffleRecord record;
};

namespace detail {

inline std::vector<Sample> strip_labels(std::span<const Sample> samples) {
  std::vector<Sample> out(samples.begin(), samples.end());
  for (Sample& s : out) s.label.reset();
  return out;
}

inline std::vector<UserLabel> first_user_labels(const Dataset& adapt_oracle, std::size_t count) {
  std::vector<UserLabel> out;
  for (std::size_t i = 0; i < adapt_oracle.size() && out.size() < count; ++i) {
    if (adapt_oracle.samples[i].label) out.push_back({i, *adapt_oracle.samples[i].label});
  }
  return out;
}

}  // namespace detail

/// Full adaptation of one split: base training, clustering, labelling,
/// extension, scoring and selection, with optional bagging and fault
/// reduction. Column 0 of every split part is the base feature and column 1
/// the new one. The adaptation labels are read only to simulate user input.
inline PipelineOutcome run_pipeline(const SplitTriple& split, const PipelineConfig& cfg) {
  validate(cfg);
  if (split.train.feature_count() < 2) throw Error(ErrorKind::InvalidArgument, "pipeline expects [base, new] columns");
  PipelineOutcome out;
  ShuffleRecord& rec = out.record;
  rec.seed = cfg.seed;

  const std::size_t base_col[] = {kBaseFeature};
  const Dataset train_1d = split.train.project(base_col);
  rec.base_min_leaf = select_min_leaf(train_1d, cfg.min_leaf_grid, cfg.min_leaf_selection);
  out.tree_1d = train(train_1d, rec.base_min_leaf);
  out.supervised_2d = train(split.train, select_min_leaf(split.train, cfg.min_leaf_grid, cfg.min_leaf_selection));
  out.final_tree = out.tree_1d;

  const std::vector<Sample> points = detail::strip_labels(split.adapt.samples);
  const auto user_labels = detail::first_user_labels(split.adapt, cfg.prelabel_count);
  rec.labels_used = user_labels.size();

  std::vector<const DecisionTree*> shortlist;
  std::vector<AdaptedSolution> candidates;
  std::optional<AdaptedSolution> bagged;

  if (!cfg.bagging) {
    candidates = adapt_candidates(out.tree_1d, train_1d, points, user_labels, cfg);
    rec.candidates = candidates.size();
    const auto ranked = rank_solutions(candidates, cfg.pl_threshold);
    const std::size_t keep = cfg.fault_reduction ? cfg.fault_reduction->top_k : 1;
    for (std::size_t i = 0; i < ranked.size() && i < keep; ++i) shortlist.push_back(&candidates[ranked[i]].tree_2d);
    std::vector<std::size_t> chosen(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(shortlist.size()));
    if (!shortlist.empty()) {
      std::size_t pick = 0;
      bool ok = true;
      if (cfg.fault_reduction) {
        const auto fr = fault_reduction(out.tree_1d, shortlist, split.adapt.samples, cfg.fault_reduction->n_disagreements,
                                        cfg.fault_reduction->criterion);
        rec.labels_used += fr.labels_used;
        ok = !fr.survivors.empty();
        if (ok) pick = fr.survivors.front();
      }
      if (ok) out.solution = candidates[chosen[pick]];
    }
  } else {
    const BaggingConfig& bc = *cfg.bagging;
    const auto replicas = bootstrap_indices(points.size(), bc.replicas, bc.seed ^ cfg.seed);
    std::vector<std::vector<RegionExtension>> votes;
    std::size_t produced = 0;
    for (const auto& idx : replicas) {
      std::vector<Sample> rep;
      std::vector<UserLabel> rep_labels;
      rep.reserve(idx.size());
      for (std::size_t j = 0; j < idx.size(); ++j) {
        rep.push_back(points[idx[j]]);
        for (const UserLabel& ul : user_labels) {
          if (ul.sample == idx[j]) rep_labels.push_back({j, ul.label});
        }
      }
      auto cands = adapt_candidates(out.tree_1d, train_1d, rep, rep_labels, cfg);
      rec.candidates += cands.size();
      const auto best = select_solution(cands, cfg.pl_threshold);
      if (best) {
        votes.push_back(cands[*best].extensions);
        ++produced;
      } else {
        votes.emplace_back();
      }
    }
    if (produced > 0) {
      MergedTree merged = merge_extensions(votes, out.tree_1d, bc.threshold);
      if (merged.reverted_fraction(out.tree_1d, points) <= cfg.max_reverted_fraction) {
        AdaptedSolution sol;
        sol.tree_2d = std::move(merged.tree);
        sol.scores = score_regions(sol.tree_2d, out.tree_1d, points);
        sol.aggregate = aggregate(sol.scores);
        for (const auto& mr : merged.regions) {
          RegionExtension re;
          re.thresholds = mr.thresholds;
          sol.extensions.push_back(std::move(re));
        }
        bool ok = true;
        if (cfg.fault_reduction) {
          const DecisionTree* one[] = {&sol.tree_2d};
          const auto fr = fault_reduction(out.tree_1d, one, split.adapt.samples, cfg.fault_reduction->n_disagreements,
                                          cfg.fault_reduction->criterion);
          rec.labels_used += fr.labels_used;
          ok = !fr.survivors.empty();
        }
        if (ok) out.solution = std::move(sol);
      }
    }
  }

  rec.acc_1d = out.tree_1d.accuracy(split.test);
  rec.acc_2d_supervised = out.supervised_2d.accuracy(split.test);
  if (out.solution) {
    out.final_tree = out.solution->tree_2d;
    rec.fallback = false;
    rec.k = out.solution->k;
    rec.plausibility = out.solution->aggregate.plausibility;
    rec.gain = out.solution->aggregate.gain;
    rec.extended_regions = out.solution->extended_regions();
    rec.acc_adapted = out.final_tree.accuracy(split.test);
  } else {
    rec.acc_adapted = rec.acc_1d;
  }
  rec.accuracy_change = rec.acc_adapted - rec.acc_1d;
  return out;
}

}  // namespace selfadapt
