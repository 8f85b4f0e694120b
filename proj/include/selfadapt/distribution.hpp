#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "selfadapt/error.hpp"

namespace selfadapt {

using ClassId = std::size_t;

/// Probability vector over class ids. An all-zero vector is the explicit
/// "empty" distribution (e.g. a region that received no points).
class ClassDistribution {
 public:
  ClassDistribution() = default;
  explicit ClassDistribution(std::size_t num_classes) : probs_(num_classes, 0.0) {}

  /// Normalizes non-negative masses. All-zero masses give the empty distribution.
  static ClassDistribution from_counts(std::span<const double> counts) {
    ClassDistribution d(counts.size());
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total > 0.0) {
      for (std::size_t i = 0; i < counts.size(); ++i) d.probs_[i] = counts[i] / total;
    }
    return d;
  }

  static ClassDistribution point_mass(std::size_t num_classes, ClassId c) {
    ClassDistribution d(num_classes);
    d.probs_.at(c) = 1.0;
    return d;
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  bool empty() const {
    return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p == 0.0; });
  }

  /// Ties resolve to the lowest class id.
  ClassId argmax() const {
    return static_cast<ClassId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
  }

  double max() const { return probs_.empty() ? 0.0 : *std::max_element(probs_.begin(), probs_.end()); }

  bool is_valid(double tol = 1e-9) const {
    double sum = 0.0;
    for (double p : probs_) {
      if (p < 0.0 || p > 1.0 + tol) return false;
      sum += p;
    }
    return empty() || std::abs(sum - 1.0) <= tol;
  }

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  std::vector<double> probs_;
};

inline void require_same_size(const ClassDistribution& a, const ClassDistribution& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "class distributions of size " + std::to_string(a.size()) +
                                                  " and " + std::to_string(b.size()));
  }
}

}  // namespace selfadapt
