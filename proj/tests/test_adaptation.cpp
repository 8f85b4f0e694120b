#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace selfadapt;
using testing_util::dist;

namespace {

// A 1D tree with one split at 0.5 and the given leaf distributions.
DecisionTree split_tree(ClassDistribution left, ClassDistribution right, std::size_t n_left = 10,
                        std::size_t n_right = 10) {
  std::vector<TreeNode> nodes(3);
  nodes[0].feature = 0;
  nodes[0].threshold = 0.5;
  nodes[0].left = 1;
  nodes[0].right = 2;
  const std::size_t classes = left.size();
  nodes[1] = TreeNode::leaf(std::move(left), n_left);
  nodes[2] = TreeNode::leaf(std::move(right), n_right);
  return DecisionTree(nodes, classes, 1, 1);
}

ClusterAssignment assignment(std::vector<std::size_t> ids, std::size_t k) { return {k, std::move(ids)}; }

struct Scene {
  std::vector<Sample> points;
  ClusterAssignment assignment;
};

// Two clusters sharing base range [0.55, 0.95], separated at new-feature 0.5,
// plus a third cluster alone on [0.05, 0.45].
Scene overlap_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Scene s;
  s.assignment.k = 3;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 3;
    const double base = c == 0 ? 0.05 + 0.4 * u(rng) : 0.55 + 0.4 * u(rng);
    const double extra = c == 1 ? 0.1 + 0.3 * u(rng) : 0.6 + 0.3 * u(rng);
    s.points.push_back({{base, extra}, std::nullopt});
    s.assignment.cluster_of.push_back(static_cast<std::size_t>(c));
  }
  return s;
}

}  // namespace

TEST(ClusterTree, SeparatedClustersGiveSingleRegions) {
  std::vector<Sample> pts;
  std::vector<std::size_t> ids;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({{0.05 + 0.02 * i, 0.5}, std::nullopt});
    ids.push_back(0);
    pts.push_back({{0.65 + 0.02 * i, 0.5}, std::nullopt});
    ids.push_back(1);
  }
  const auto cmt = build_cluster_tree(pts, assignment(ids, 2), 2);
  const auto kinds = classify_regions(cmt, 0.95);
  ASSERT_EQ(kinds.size(), 2u);
  EXPECT_TRUE(kinds[0].single);
  EXPECT_TRUE(kinds[1].single);
  EXPECT_NE(kinds[0].clusters.front(), kinds[1].clusters.front());
}

TEST(ClusterTree, IdenticalBaseValuesGiveOneMultiRegion) {
  std::vector<Sample> pts;
  std::vector<std::size_t> ids;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({{0.1 * i, 0.2}, std::nullopt});
    ids.push_back(0);
    pts.push_back({{0.1 * i, 0.8}, std::nullopt});
    ids.push_back(1);
  }
  const auto cmt = build_cluster_tree(pts, assignment(ids, 2), 2);
  const auto kinds = classify_regions(cmt, 0.95);
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_FALSE(kinds[0].single);
  EXPECT_EQ(kinds[0].clusters, (std::vector<std::size_t>{0, 1}));
}

TEST(ClassifyRegions, ThresholdBoundary) {
  const ClusterMembershipTree cmt{split_tree(dist({0.96, 0.04}), dist({0.94, 0.06}))};
  const auto kinds = classify_regions(cmt, 0.95);
  EXPECT_TRUE(kinds[0].single);
  EXPECT_EQ(kinds[0].clusters, (std::vector<std::size_t>{0}));
  EXPECT_FALSE(kinds[1].single);
  EXPECT_EQ(kinds[1].clusters, (std::vector<std::size_t>{0, 1}));

  const ClusterMembershipTree pure{split_tree(dist({1, 0}), dist({0, 1}))};
  for (double th : {0.51, 0.95, 1.0}) {
    for (const auto& k : classify_regions(pure, th)) EXPECT_TRUE(k.single);
  }
  EXPECT_THROW(classify_regions(pure, 0.5), Error);
  EXPECT_THROW(classify_regions(pure, 1.01), Error);
}

TEST(InferLabels, CountsPoolingAndHidden) {
  // Region 0 (x <= 0.5) is single for cluster 0, region 1 is multi.
  const ClusterMembershipTree cmt{split_tree(dist({1, 0, 0}), dist({0, 0.5, 0.5}))};
  const auto kinds = classify_regions(cmt, 0.95);
  Dataset train_1d;
  train_1d.num_classes = 2;
  for (int i = 0; i < 8; ++i) train_1d.samples.push_back({{0.2}, 0});
  for (int i = 0; i < 2; ++i) train_1d.samples.push_back({{0.3}, 1});
  for (int i = 0; i < 5; ++i) train_1d.samples.push_back({{0.8}, 1});
  const ClusterLabeling l = infer_labels(cmt, kinds, train_1d);
  ASSERT_TRUE(l.is_labeled(0));
  EXPECT_DOUBLE_EQ(l[0]->distribution[0], 0.8);
  EXPECT_DOUBLE_EQ(l[0]->distribution[1], 0.2);
  EXPECT_EQ(l[0]->provenance, Provenance::Inferred);
  EXPECT_FALSE(l.is_labeled(1));
  EXPECT_FALSE(l.is_labeled(2));

  const auto counts = single_region_class_counts(cmt, kinds, train_1d, 3);
  double pooled = 0;
  for (const auto& c : counts) pooled += std::accumulate(c.begin(), c.end(), 0.0);
  EXPECT_DOUBLE_EQ(pooled, 10.0);
}

TEST(InferLabels, PoolsRegionsOfSameCluster) {
  const ClusterMembershipTree cmt{split_tree(dist({1, 0}), dist({0.97, 0.03}))};
  const auto kinds = classify_regions(cmt, 0.95);
  Dataset train_1d;
  train_1d.num_classes = 2;
  for (auto [x, c] : std::vector<std::pair<double, ClassId>>{{0.1, 0}, {0.1, 0}, {0.1, 0}, {0.1, 1}, {0.9, 0}, {0.9, 1}, {0.9, 1}, {0.9, 1}}) {
    train_1d.samples.push_back({{x}, c});
  }
  const ClusterLabeling l = infer_labels(cmt, kinds, train_1d);
  EXPECT_DOUBLE_EQ(l[0]->distribution[0], 0.5);
  EXPECT_DOUBLE_EQ(l[0]->distribution[1], 0.5);
}

TEST(InferLabels, AnchorsAreKept) {
  const ClusterMembershipTree cmt{split_tree(dist({1, 0}), dist({0, 1}))};
  const auto kinds = classify_regions(cmt, 0.95);
  Dataset train_1d;
  train_1d.num_classes = 2;
  train_1d.samples = {{{0.1}, 0}, {{0.9}, 1}};
  ClusterLabeling anchors(2, 2);
  anchors.set(0, ClassDistribution::point_mass(2, 1), Provenance::User);
  const ClusterLabeling l = infer_labels(cmt, kinds, train_1d, anchors);
  EXPECT_EQ(l[0]->provenance, Provenance::User);
  EXPECT_EQ(l[0]->distribution.argmax(), 1u);
  EXPECT_EQ(l[1]->distribution.argmax(), 1u);
}

TEST(ExtendTree, SplitsLabeledOverlap) {
  const Scene s = overlap_scene(1);
  const DecisionTree t1 = split_tree(dist({1, 0}), dist({0.5, 0.5}));
  ClusterLabeling l(3, 2);
  l.set(0, ClassDistribution::point_mass(2, 0), Provenance::Inferred);
  l.set(1, ClassDistribution::point_mass(2, 0), Provenance::Inferred);
  l.set(2, ClassDistribution::point_mass(2, 1), Provenance::Inferred);
  const Extension e = extend_tree(t1, s.points, s.assignment, l, 2);
  EXPECT_FALSE(e.regions[0].extended());
  ASSERT_TRUE(e.regions[1].extended());
  ASSERT_EQ(e.regions[1].thresholds.size(), 1u);
  EXPECT_NEAR(e.regions[1].thresholds[0], 0.5, 0.1);
  EXPECT_EQ(e.regions[1].cells[0].distribution.argmax(), 0u);
  EXPECT_EQ(e.regions[1].cells[1].distribution.argmax(), 1u);
  const double lo[] = {0.7, 0.2}, hi[] = {0.7, 0.8};
  EXPECT_EQ(e.tree_2d.classify(lo), 0u);
  EXPECT_EQ(e.tree_2d.classify(hi), 1u);
}

TEST(ExtendTree, RequiresAllClustersLabeled) {
  const Scene s = overlap_scene(2);
  const DecisionTree t1 = split_tree(dist({1, 0}), dist({0.5, 0.5}));
  ClusterLabeling l(3, 2);
  l.set(1, ClassDistribution::point_mass(2, 0), Provenance::Inferred);
  const Extension e = extend_tree(t1, s.points, s.assignment, l, 2);
  EXPECT_EQ(e.extended_count(), 0u);

  // Monotonicity: labelling the remaining cluster only adds extensions.
  ClusterLabeling more = l;
  more.set(2, ClassDistribution::point_mass(2, 1), Provenance::Inferred);
  const Extension e2 = extend_tree(t1, s.points, s.assignment, more, 2);
  for (std::size_t r = 0; r < e.regions.size(); ++r) {
    if (e.regions[r].extended()) EXPECT_TRUE(e2.regions[r].extended());
  }
  EXPECT_EQ(e2.extended_count(), 1u);
}

TEST(ExtendTree, EmptyLabelingIsIdentity) {
  const Scene s = overlap_scene(3);
  const DecisionTree t1 = split_tree(dist({0.9, 0.1}), dist({0.4, 0.6}));
  const Extension e = extend_tree(t1, s.points, s.assignment, ClusterLabeling(3, 2), 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int i = 0; i < 2000; ++i) {
    const double p[] = {u(rng), u(rng)};
    ASSERT_EQ(e.tree_2d.classify(p), t1.classify(std::span<const double>(p, 1)));
  }
}

TEST(ExtendTree, UnextendedRegionsAgreeOnScenario) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = generate_synthetic(scenario_a(300, seed)).data;
    const std::size_t base[] = {kBaseFeature};
    const DecisionTree t1 = train(data.project(base), 20);
    const Dendrogram dg = agglomerate(data);
    for (std::size_t k : {2u, 3u, 6u}) {
      const auto a = cut(dg, k);
      const auto cmt = build_cluster_tree(data.samples, a, 2);
      const auto labeling = infer_labels(cmt, classify_regions(cmt, 0.95), data.project(base));
      const Extension e = extend_tree(t1, data.samples, a, labeling, 2);
      for (const Sample& s : data.samples) {
        const std::size_t r = t1.region_of(std::span(s.features).first(1));
        if (!e.regions[r].extended()) {
          ASSERT_EQ(e.tree_2d.classify(s), t1.classify(std::span(s.features).first(1)));
        }
      }
    }
  }
}

TEST(ClusterTree, ScenarioClustersOwnSingleRegions) {
  const auto syn = generate_synthetic(scenario_a(600, 7));
  const Dendrogram dg = agglomerate(syn.data);
  const auto a = cut(dg, 3);
  const auto kinds = classify_regions(build_cluster_tree(syn.data.samples, a, 2), 0.95);
  std::set<std::size_t> owners;
  for (const auto& k : kinds) {
    if (k.single) owners.insert(k.clusters.front());
  }
  EXPECT_EQ(owners.size(), 3u);
}
