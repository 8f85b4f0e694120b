#pragma once

#include <selfadapt.hpp>

#include <array>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testing_util {

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "selfadapt_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline std::string write_file(const std::string& name, const std::string& content) {
  const std::string path = temp_path(name);
  std::ofstream(path) << content;
  return path;
}

inline selfadapt::Sample sample(std::vector<double> f, std::optional<selfadapt::ClassId> label = std::nullopt) {
  return {std::move(f), label};
}

inline selfadapt::Dataset dataset_1d(const std::vector<std::pair<double, selfadapt::ClassId>>& rows, std::size_t classes) {
  selfadapt::Dataset d;
  d.num_classes = classes;
  d.feature_names = {"x"};
  for (const auto& [x, c] : rows) d.samples.push_back({{x}, c});
  return d;
}

inline selfadapt::ClassDistribution dist(std::vector<double> v) { return selfadapt::ClassDistribution::from_counts(v); }

}  // namespace testing_util
