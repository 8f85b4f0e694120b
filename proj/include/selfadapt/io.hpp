#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfadapt/decision_tree.hpp"
#include "selfadapt/pipeline.hpp"
#include "selfadapt/solution.hpp"
#include "selfadapt/sweep.hpp"

namespace selfadapt {

using json = nlohmann::json;

// ------------------------------------------------------------------ trees

namespace detail {

inline json node_to_json(const DecisionTree& t, int i) {
  const TreeNode& n = t.nodes()[static_cast<std::size_t>(i)];
  if (n.is_leaf()) {
    return {{"region", n.region},
            {"count", n.train_count},
            {"distribution", std::vector<double>(n.distribution.probs().begin(), n.distribution.probs().end())}};
  }
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", node_to_json(t, n.left)},
          {"right", node_to_json(t, n.right)}};
}

inline int node_from_json(const json& j, std::vector<TreeNode>& out) {
  const int at = static_cast<int>(out.size());
  out.emplace_back();
  if (j.contains("feature")) {
    out[static_cast<std::size_t>(at)].feature = j.at("feature").get<int>();
    out[static_cast<std::size_t>(at)].threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), out);
    const int r = node_from_json(j.at("right"), out);
    out[static_cast<std::size_t>(at)].left = l;
    out[static_cast<std::size_t>(at)].right = r;
  } else {
    const auto probs = j.at("distribution").get<std::vector<double>>();
    out[static_cast<std::size_t>(at)] = TreeNode::leaf(ClassDistribution::from_counts(probs), j.at("count").get<std::size_t>());
  }
  return at;
}

}  // namespace detail

/// Nested-node text form: internal nodes carry feature and threshold, leaves
/// carry region id, training count and class distribution.
inline json tree_to_json(const DecisionTree& t) {
  return {{"num_classes", t.num_classes()},
          {"min_leaf", t.min_leaf()},
          {"feature_count", t.feature_count()},
          {"root", detail::node_to_json(t, 0)}};
}

inline DecisionTree tree_from_json(const json& j) {
  std::vector<TreeNode> nodes;
  detail::node_from_json(j.at("root"), nodes);
  return DecisionTree(std::move(nodes), j.at("num_classes").get<std::size_t>(), j.at("min_leaf").get<std::size_t>(),
                      j.at("feature_count").get<std::size_t>());
}

inline json labeling_to_json(const ClusterLabeling& l) {
  json rows = json::array();
  for (std::size_t c = 0; c < l.num_clusters(); ++c) {
    if (!l.is_labeled(c)) {
      rows.push_back({{"cluster", c}, {"labeled", false}});
      continue;
    }
    const auto& lab = *l[c];
    rows.push_back({{"cluster", c},
                    {"labeled", true},
                    {"provenance", to_string(lab.provenance)},
                    {"distribution", std::vector<double>(lab.distribution.probs().begin(), lab.distribution.probs().end())}});
  }
  return rows;
}

inline json solution_to_json(const AdaptedSolution& s) {
  json regions = json::array();
  for (const auto& r : s.scores) {
    regions.push_back({{"region", r.region_id},
                       {"included", r.included},
                       {"weight", r.weight},
                       {"plausibility", r.plausibility},
                       {"gain", r.gain}});
  }
  return {{"k", s.k},
          {"plausibility", s.aggregate.plausibility},
          {"gain", s.aggregate.gain},
          {"extended_regions", s.extended_regions()},
          {"labeling", labeling_to_json(s.labeling)},
          {"regions", regions},
          {"tree", tree_to_json(s.tree_2d)}};
}

// ----------------------------------------------------------------- config

/// Reads a JSON object whose keys mirror PipelineConfig. Unknown keys and
/// out-of-range values are config errors.
inline PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  PipelineConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "cluster_min_leaf") cfg.cluster_min_leaf = v.get<std::size_t>();
      else if (key == "purity_threshold") cfg.purity_threshold = v.get<double>();
      else if (key == "pl_threshold") cfg.pl_threshold = v.get<double>();
      else if (key == "k_max") cfg.k_max = v.get<std::size_t>();
      else if (key == "linkage") cfg.linkage = parse_linkage(v.get<std::string>());
      else if (key == "similarity_search") cfg.similarity_search = v.get<bool>();
      else if (key == "search_cap") cfg.search_cap = v.get<std::size_t>();
      else if (key == "prelabel_count") cfg.prelabel_count = v.get<std::size_t>();
      else if (key == "min_leaf_grid") cfg.min_leaf_grid = v.get<std::vector<std::size_t>>();
      else if (key == "min_leaf_selection") {
        const auto m = v.get<std::string>();
        if (m == "cv") cfg.min_leaf_selection = MinLeafSelection::CrossValidation;
        else if (m == "training") cfg.min_leaf_selection = MinLeafSelection::TrainingAccuracy;
        else throw Error(ErrorKind::Config, "min_leaf_selection must be 'cv' or 'training'");
      } else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "max_reverted_fraction") cfg.max_reverted_fraction = v.get<double>();
      else if (key == "bagging") {
        if (v.is_null() || v == false) continue;
        BaggingConfig b;
        if (v.is_object()) {
          b.replicas = v.value("replicas", b.replicas);
          b.threshold = v.value("threshold", b.threshold);
          b.seed = v.value("seed", b.seed);
        }
        cfg.bagging = b;
      } else if (key == "fault_reduction") {
        if (v.is_null() || v == false) continue;
        FaultReductionConfig f;
        if (v.is_object()) {
          f.n_disagreements = v.value("n_disagreements", f.n_disagreements);
          f.criterion = v.value("criterion", f.criterion);
          f.top_k = v.value("top_k", f.top_k);
        }
        cfg.fault_reduction = f;
      } else {
        throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  validate(cfg);
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed config: ") + e.what());
  }
  return config_from_json(j);
}

inline json config_to_json(const PipelineConfig& cfg) {
  json j = {{"cluster_min_leaf", cfg.cluster_min_leaf}, {"purity_threshold", cfg.purity_threshold},
            {"pl_threshold", cfg.pl_threshold},         {"k_max", cfg.k_max},
            {"linkage", to_string(cfg.linkage)},        {"similarity_search", cfg.similarity_search},
            {"search_cap", cfg.search_cap},             {"prelabel_count", cfg.prelabel_count},
            {"min_leaf_grid", cfg.min_leaf_grid},       {"seed", cfg.seed},
            {"min_leaf_selection", cfg.min_leaf_selection == MinLeafSelection::CrossValidation ? "cv" : "training"},
            {"max_reverted_fraction", cfg.max_reverted_fraction}};
  j["bagging"] = nullptr;
  if (cfg.bagging) j["bagging"] = {{"replicas", cfg.bagging->replicas}, {"threshold", cfg.bagging->threshold}, {"seed", cfg.bagging->seed}};
  j["fault_reduction"] = nullptr;
  if (cfg.fault_reduction) {
    j["fault_reduction"] = {{"n_disagreements", cfg.fault_reduction->n_disagreements},
                            {"criterion", cfg.fault_reduction->criterion},
                            {"top_k", cfg.fault_reduction->top_k}};
  }
  return j;
}

// ---------------------------------------------------------------- results

inline json record_to_json(const ShuffleRecord& r) {
  return {{"seed", r.seed},
          {"acc_1d", r.acc_1d},
          {"acc_2d_supervised", r.acc_2d_supervised},
          {"acc_adapted", r.acc_adapted},
          {"accuracy_change", r.accuracy_change},
          {"labels_used", r.labels_used},
          {"k", r.k},
          {"plausibility", r.plausibility},
          {"gain", r.gain},
          {"fallback", r.fallback},
          {"base_min_leaf", r.base_min_leaf},
          {"extended_regions", r.extended_regions},
          {"candidates", r.candidates}};
}

inline ShuffleRecord record_from_json(const json& j) {
  ShuffleRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.acc_1d = j.at("acc_1d").get<double>();
  r.acc_2d_supervised = j.at("acc_2d_supervised").get<double>();
  r.acc_adapted = j.at("acc_adapted").get<double>();
  r.accuracy_change = j.at("accuracy_change").get<double>();
  r.labels_used = j.at("labels_used").get<std::size_t>();
  r.k = j.at("k").get<std::size_t>();
  r.plausibility = j.at("plausibility").get<double>();
  r.gain = j.at("gain").get<double>();
  r.fallback = j.at("fallback").get<bool>();
  r.base_min_leaf = j.value("base_min_leaf", std::size_t{0});
  r.extended_regions = j.value("extended_regions", std::size_t{0});
  r.candidates = j.value("candidates", std::size_t{0});
  return r;
}

/// One line per (pair, shuffle).
inline std::string results_to_jsonl(std::span<const PairResult> results) {
  std::ostringstream out;
  for (const auto& pr : results) {
    for (std::size_t s = 0; s < pr.records.size(); ++s) {
      json line = record_to_json(pr.records[s]);
      line["base"] = pr.base;
      line["new"] = pr.added;
      line["base_name"] = pr.base_name;
      line["new_name"] = pr.added_name;
      line["shuffle"] = s;
      out << line.dump() << '\n';
    }
  }
  return out.str();
}

/// Regroups JSONL lines by (base, new) pair in order of first appearance.
inline std::vector<PairResult> results_from_jsonl(std::istream& in) {
  std::vector<PairResult> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      const auto base = j.at("base").get<std::size_t>();
      const auto added = j.at("new").get<std::size_t>();
      auto it = std::find_if(out.begin(), out.end(), [&](const PairResult& p) { return p.base == base && p.added == added; });
      if (it == out.end()) {
        out.push_back({base, added, j.value("base_name", std::string{}), j.value("new_name", std::string{}), {}});
        it = std::prev(out.end());
      }
      it->records.push_back(record_from_json(j));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, "results line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline json report_to_json(const Report& r) {
  return {{"runs", r.runs},
          {"positive_count", r.positive},
          {"negative_count", r.negative},
          {"unchanged_count", r.unchanged},
          {"positive_median", r.positive_median},
          {"negative_median", r.negative_median},
          {"positive_p90", r.positive_p90},
          {"negative_p90", r.negative_p90},
          {"positive_sum", r.positive_sum},
          {"negative_sum", r.negative_sum},
          {"mean_labels_used", r.mean_labels_used},
          {"bin_width", r.bin_width}};
}

inline std::string histogram_csv(const Report& r) {
  std::ostringstream out;
  out << "bin_low,bin_high,count\n";
  out << std::setprecision(10);
  for (const auto& b : r.histogram) out << b.low << ',' << b.high << ',' << b.count << '\n';
  return out.str();
}

}  // namespace selfadapt
