#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfadapt/distribution.hpp"
#include "selfadapt/error.hpp"

namespace selfadapt {

struct Sample {
  std::vector<double> features;
  std::optional<ClassId> label;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;
  std::vector<std::string> feature_names;
  /// Original label strings by class id; empty when labels were numeric.
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::size_t feature_count() const noexcept {
    return samples.empty() ? feature_names.size() : samples.front().features.size();
  }

  bool fully_labeled() const {
    return std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.label.has_value(); });
  }

  /// Keeps only the given feature columns, in the given order.
  Dataset project(std::span<const std::size_t> columns) const {
    Dataset out;
    out.num_classes = num_classes;
    out.class_names = class_names;
    for (std::size_t c : columns) {
      out.feature_names.push_back(c < feature_names.size() ? feature_names[c] : "f" + std::to_string(c));
    }
    out.samples.reserve(samples.size());
    for (const Sample& s : samples) {
      Sample p;
      p.label = s.label;
      for (std::size_t c : columns) p.features.push_back(s.features.at(c));
      out.samples.push_back(std::move(p));
    }
    return out;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.feature_names = feature_names;
    out.class_names = class_names;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(samples.at(i));
    return out;
  }

  std::vector<ClassId> labels() const {
    std::vector<ClassId> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
      if (!s.label) throw Error(ErrorKind::InvalidArgument, "dataset contains unlabeled samples");
      out.push_back(*s.label);
    }
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

inline std::optional<std::size_t> parse_class_id(const std::string& text) {
  const std::string t = trim(text);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

}  // namespace detail

/// Reads a header-row CSV. Every column except `label_column` is a numeric
/// feature. Labels that are all non-negative integers are used as class ids
/// directly; otherwise label strings get ids in first-seen order. An empty
/// label cell yields an unlabeled sample.
inline Dataset load_csv(const std::string& path, const std::string& label_column = "label") {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path);

  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) throw Error(ErrorKind::EmptyInput, path + " has no header");
  const auto header = detail::split_csv_line(line);

  std::size_t label_idx = header.size();
  std::vector<std::size_t> feature_cols;
  Dataset d;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = detail::trim(header[c]);
    if (name == label_column) {
      label_idx = c;
    } else {
      feature_cols.push_back(c);
      d.feature_names.push_back(name);
    }
  }
  if (label_idx == header.size()) throw Error(ErrorKind::ParseError, "label column '" + label_column + "' not in header");

  std::vector<std::string> raw_labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                             " cells, expected " + std::to_string(header.size()));
    }
    Sample s;
    s.features.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto v = detail::parse_double(cells[feature_cols[k]]);
      if (!v) {
        throw Error(ErrorKind::ParseError, "non-numeric value '" + cells[feature_cols[k]] + "' at row " +
                                               std::to_string(row) + ", column '" + d.feature_names[k] + "'");
      }
      s.features.push_back(*v);
    }
    raw_labels.push_back(detail::trim(cells[label_idx]));
    d.samples.push_back(std::move(s));
  }
  if (d.samples.empty()) throw Error(ErrorKind::EmptyInput, path + " has no data rows");

  const bool numeric = std::all_of(raw_labels.begin(), raw_labels.end(), [](const std::string& l) {
    return l.empty() || detail::parse_class_id(l).has_value();
  });
  if (numeric) {
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      if (raw_labels[i].empty()) continue;
      const ClassId id = *detail::parse_class_id(raw_labels[i]);
      d.samples[i].label = id;
      d.num_classes = std::max(d.num_classes, id + 1);
    }
  } else {
    std::unordered_map<std::string, ClassId> ids;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      if (raw_labels[i].empty()) continue;
      auto [it, inserted] = ids.try_emplace(raw_labels[i], d.class_names.size());
      if (inserted) d.class_names.push_back(raw_labels[i]);
      d.samples[i].label = it->second;
    }
    d.num_classes = d.class_names.size();
  }
  return d;
}

/// Writes labels as integer class ids and values with full precision so that
/// `load_csv` reproduces the dataset exactly.
inline void write_csv(const Dataset& d, const std::string& path, const std::string& label_column = "label") {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path);
  for (const auto& name : d.feature_names) out << name << ',';
  out << label_column << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Sample& s : d.samples) {
    for (double v : s.features) out << v << ',';
    if (s.label) out << *s.label;
    out << '\n';
  }
}

struct NormalizationRecord {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<bool> degenerate;

  bool any_degenerate() const { return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end(); }

  /// Maps later data with the recorded parameters (values are not clamped).
  Dataset apply(const Dataset& d) const {
    Dataset out = d;
    for (Sample& s : out.samples) {
      for (std::size_t f = 0; f < s.features.size(); ++f) {
        s.features[f] = degenerate[f] ? 0.0 : (s.features[f] - min[f]) / (max[f] - min[f]);
      }
    }
    return out;
  }
};

/// Affine map of each feature column onto [0,1]. Constant columns become all
/// zeros and are flagged degenerate.
inline std::pair<Dataset, NormalizationRecord> normalize_unit_interval(const Dataset& d) {
  if (d.empty()) throw Error(ErrorKind::EmptyInput, "cannot normalize an empty dataset");
  const std::size_t nf = d.feature_count();
  NormalizationRecord rec;
  rec.min.assign(nf, std::numeric_limits<double>::infinity());
  rec.max.assign(nf, -std::numeric_limits<double>::infinity());
  for (const Sample& s : d.samples) {
    if (s.features.size() != nf) throw Error(ErrorKind::DimensionMismatch, "ragged feature rows");
    for (std::size_t f = 0; f < nf; ++f) {
      rec.min[f] = std::min(rec.min[f], s.features[f]);
      rec.max[f] = std::max(rec.max[f], s.features[f]);
    }
  }
  rec.degenerate.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) rec.degenerate[f] = !(rec.max[f] > rec.min[f]);
  return {rec.apply(d), rec};
}

struct SplitTriple {
  Dataset train;
  /// Labels are kept for oracle use only (evaluation, simulated user input).
  Dataset adapt;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> adapt_indices;
  std::vector<std::size_t> test_indices;
};

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

/// Shuffles and splits 2:1:1. Train gets ceil(n/2), adapt gets the ceiling of
/// half the remainder, test the rest.
inline SplitTriple shuffle_split(const Dataset& d, std::uint64_t seed) {
  if (d.size() < 8) throw Error(ErrorKind::DatasetTooSmall, "need at least 8 samples, got " + std::to_string(d.size()));
  if (!d.fully_labeled()) throw Error(ErrorKind::InvalidArgument, "shuffle_split requires labels on every sample");
  const auto perm = seeded_permutation(d.size(), seed);
  const std::size_t n_train = (d.size() + 1) / 2;
  const std::size_t rest = d.size() - n_train;
  const std::size_t n_adapt = (rest + 1) / 2;

  SplitTriple split;
  split.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.adapt_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                             perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_adapt));
  split.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_adapt), perm.end());
  split.train = d.subset(split.train_indices);
  split.adapt = d.subset(split.adapt_indices);
  split.test = d.subset(split.test_indices);
  return split;
}

}  // namespace selfadapt
