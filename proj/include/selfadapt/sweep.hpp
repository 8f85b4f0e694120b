#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "selfadapt/dataset.hpp"
#include "selfadapt/pipeline.hpp"

namespace selfadapt {

struct PairResult {
  std::size_t base = 0;
  std::size_t added = 0;
  std::string base_name;
  std::string added_name;
  std::vector<ShuffleRecord> records;

  friend bool operator==(const PairResult&, const PairResult&) = default;
};

/// Seed of shuffle `s`; the same for every feature pair so that pairs are
/// compared on identical splits.
inline std::uint64_t shuffle_seed(std::uint64_t base_seed, std::size_t s) {
  return base_seed * 1000003ULL + static_cast<std::uint64_t>(s);
}

/// Ordered pairs (base, new) of distinct non-degenerate features.
inline std::vector<std::pair<std::size_t, std::size_t>> feature_pairs(const std::vector<bool>& degenerate) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < degenerate.size(); ++i) {
    for (std::size_t j = 0; j < degenerate.size(); ++j) {
      if (i != j && !degenerate[i] && !degenerate[j]) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

/// Normalizes `d`, then runs the pipeline `shuffles` times on every ordered
/// feature pair. Runs execute on `threads` workers; results are stored by
/// position, so the output does not depend on scheduling.
inline std::vector<PairResult> sweep(const Dataset& d, const PipelineConfig& cfg, std::size_t shuffles = 5,
                                     std::size_t threads = 0) {
  validate(cfg);
  const auto [norm, rec] = normalize_unit_interval(d);
  const auto pairs = feature_pairs(rec.degenerate);
  if (pairs.empty()) throw Error(ErrorKind::InvalidArgument, "need at least 2 non-degenerate features");

  std::vector<PairResult> results(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    results[p].base = pairs[p].first;
    results[p].added = pairs[p].second;
    results[p].base_name = norm.feature_names.at(pairs[p].first);
    results[p].added_name = norm.feature_names.at(pairs[p].second);
    results[p].records.resize(shuffles);
  }

  const std::size_t jobs = pairs.size() * shuffles;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(jobs, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t p = job / shuffles, s = job % shuffles;
      try {
        const std::size_t cols[] = {pairs[p].first, pairs[p].second};
        PipelineConfig run_cfg = cfg;
        run_cfg.seed = shuffle_seed(cfg.seed, s);
        const SplitTriple split = shuffle_split(norm.project(cols), run_cfg.seed);
        results[p].records[s] = run_pipeline(split, run_cfg).record;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct Report {
  std::size_t runs = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t unchanged = 0;
  double positive_median = 0.0;
  double negative_median = 0.0;
  double positive_p90 = 0.0;
  double negative_p90 = 0.0;
  double positive_sum = 0.0;
  double negative_sum = 0.0;
  double mean_labels_used = 0.0;
  double bin_width = 0.01;
  std::vector<HistogramBin> histogram;
};

/// Linear-interpolation percentile of a sorted sample, q in [0, 1].
inline double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Accuracy changes are fractions (0.05 = +5 percentage points). Bins are
/// centred on multiples of `bin_width`; negative percentiles are taken over
/// magnitudes, so negative_p90 is the 90th percentile loss.
inline Report report(std::span<const PairResult> results, double bin_width = 0.01) {
  if (!(bin_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "bin width must be positive");
  std::vector<double> changes, pos, neg;
  double labels = 0.0;
  for (const auto& pr : results) {
    for (const auto& r : pr.records) {
      changes.push_back(r.accuracy_change);
      labels += static_cast<double>(r.labels_used);
    }
  }
  if (changes.empty()) throw Error(ErrorKind::EmptyInput, "no results to report");

  Report rep;
  rep.bin_width = bin_width;
  rep.runs = changes.size();
  rep.mean_labels_used = labels / static_cast<double>(changes.size());
  for (double c : changes) {
    if (c > 0.0) pos.push_back(c);
    else if (c < 0.0) neg.push_back(c);
  }
  rep.positive = pos.size();
  rep.negative = neg.size();
  rep.unchanged = changes.size() - pos.size() - neg.size();
  for (double c : pos) rep.positive_sum += c;
  for (double c : neg) rep.negative_sum += c;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end(), std::greater<>());  // ascending magnitude
  rep.positive_median = percentile(pos, 0.5);
  rep.positive_p90 = percentile(pos, 0.9);
  rep.negative_median = percentile(neg, 0.5);
  rep.negative_p90 = percentile(neg, 0.9);

  auto bin_of = [&](double c) { return static_cast<long long>(std::floor(c / bin_width + 0.5)); };
  const auto [lo_it, hi_it] = std::minmax_element(changes.begin(), changes.end());
  const long long lo = bin_of(*lo_it), hi = bin_of(*hi_it);
  rep.histogram.resize(static_cast<std::size_t>(hi - lo + 1));
  for (long long b = lo; b <= hi; ++b) {
    auto& bin = rep.histogram[static_cast<std::size_t>(b - lo)];
    bin.low = (static_cast<double>(b) - 0.5) * bin_width;
    bin.high = (static_cast<double>(b) + 0.5) * bin_width;
  }
  for (double c : changes) ++rep.histogram[static_cast<std::size_t>(bin_of(c) - lo)].count;
  return rep;
}

}  // namespace selfadapt
