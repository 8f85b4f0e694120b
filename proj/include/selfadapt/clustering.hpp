#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "selfadapt/dataset.hpp"
#include "selfadapt/error.hpp"

namespace selfadapt {

enum class Linkage { Ward, Average, Complete };

inline Linkage parse_linkage(const std::string& name) {
  if (name == "ward") return Linkage::Ward;
  if (name == "average") return Linkage::Average;
  if (name == "complete") return Linkage::Complete;
  throw Error(ErrorKind::Config, "unknown linkage '" + name + "'");
}

inline const char* to_string(Linkage l) {
  switch (l) {
    case Linkage::Ward: return "ward";
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
  }
  return "?";
}

/// One agglomeration step. Node ids follow the usual convention: 0..n-1 are
/// the input points, n+i is the cluster formed by merge i.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
};

struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;
};

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> cluster_of;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(k, 0);
    for (std::size_t c : cluster_of) ++s[c];
    return s;
  }
};

/// Greedy agglomeration with Lance-Williams updates. The closest pair is
/// merged each step; among equal distances the lexicographically lowest pair
/// of active slots wins. Each slot caches its nearest higher-indexed
/// neighbour so a step costs O(n) in the common case.
inline Dendrogram agglomerate(std::span<const std::vector<double>> points, Linkage linkage = Linkage::Ward) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "agglomerate needs at least 2 points");

  // Ward works on squared Euclidean distances; the others on plain distances.
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t f = 0; f < points[i].size(); ++f) {
        const double diff = points[i][f] - points[j][f];
        sq += diff * diff;
      }
      const double v = linkage == Linkage::Ward ? sq : std::sqrt(sq);
      dist[i * n + j] = dist[j * n + i] = v;
    }
  }
  auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };

  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> node_id(n);
  std::iota(node_id.begin(), node_id.end(), std::size_t{0});
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> nn(n, none);
  std::vector<double> nn_dist(n, std::numeric_limits<double>::infinity());

  auto refresh = [&](std::size_t i) {
    nn[i] = none;
    nn_dist[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (active[j] && d(i, j) < nn_dist[i]) {
        nn_dist[i] = d(i, j);
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  Dendrogram dg;
  dg.n = n;
  dg.merges.reserve(n - 1);
  double last_height = 0.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t i = none;
    for (std::size_t s = 0; s < n; ++s) {
      if (active[s] && nn[s] != none && (i == none || nn_dist[s] < nn_dist[i])) i = s;
    }
    const std::size_t j = nn[i];
    const double dij = d(i, j);

    // Ward merge heights can dip by round-off; keep the sequence monotone.
    double height = linkage == Linkage::Ward ? std::sqrt(std::max(dij, 0.0)) : dij;
    height = std::max(height, last_height);
    last_height = height;
    dg.merges.push_back({std::min(node_id[i], node_id[j]), std::max(node_id[i], node_id[j]), height});

    const double ni = static_cast<double>(size[i]);
    const double nj = static_cast<double>(size[j]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      const double dik = d(i, k);
      const double djk = d(j, k);
      double v = 0.0;
      switch (linkage) {
        case Linkage::Ward: {
          const double nk = static_cast<double>(size[k]);
          v = ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk);
          break;
        }
        case Linkage::Average: v = (ni * dik + nj * djk) / (ni + nj); break;
        case Linkage::Complete: v = std::max(dik, djk); break;
      }
      d(i, k) = d(k, i) = v;
    }
    active[j] = false;
    size[i] += size[j];
    node_id[i] = n + step;

    refresh(i);
    for (std::size_t k = 0; k < i; ++k) {
      if (!active[k]) continue;
      if (nn[k] == i || nn[k] == j) {
        refresh(k);
      } else if (d(k, i) < nn_dist[k] || (d(k, i) == nn_dist[k] && i < nn[k])) {
        nn_dist[k] = d(k, i);
        nn[k] = i;
      }
    }
    for (std::size_t k = i + 1; k < j; ++k) {
      if (active[k] && nn[k] == j) refresh(k);
    }
  }
  return dg;
}

inline Dendrogram agglomerate(const Dataset& d, Linkage linkage = Linkage::Ward) {
  std::vector<std::vector<double>> pts;
  pts.reserve(d.size());
  for (const Sample& s : d.samples) pts.push_back(s.features);
  return agglomerate(pts, linkage);
}

/// Undoes the last k-1 merges. Cluster ids are dense and ordered by the
/// smallest member index.
inline ClusterAssignment cut(const Dendrogram& dg, std::size_t k) {
  if (k < 2 || k > dg.n) {
    throw Error(ErrorKind::InvalidArgument, "cut k=" + std::to_string(k) + " outside [2, " + std::to_string(dg.n) + "]");
  }
  std::vector<std::size_t> parent(2 * dg.n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t m = 0; m < dg.n - k; ++m) {
    const std::size_t created = dg.n + m;
    parent[find(dg.merges[m].a)] = created;
    parent[find(dg.merges[m].b)] = created;
  }
  ClusterAssignment out;
  out.k = k;
  out.cluster_of.resize(dg.n);
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dense(2 * dg.n, unset);
  std::size_t next = 0;
  for (std::size_t i = 0; i < dg.n; ++i) {
    const std::size_t root = find(i);
    if (dense[root] == unset) dense[root] = next++;
    out.cluster_of[i] = dense[root];
  }
  return out;
}

}  // namespace selfadapt
