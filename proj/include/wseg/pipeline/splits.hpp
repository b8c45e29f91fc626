#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "wseg/pipeline/manifest.hpp"

namespace wseg::pipeline {

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct Splits {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  SplitRatios ratios;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static Splits from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& file) const;
  static Splits load(const std::filesystem::path& file);
};

// Seeded shuffle, then contiguous cuts. val and test get floor(n * ratio) ids,
// train takes the remainder.
Splits split_dataset(const DatasetManifest& manifest, SplitRatios ratios = {}, std::uint64_t seed = 0);
Splits split_ids(std::vector<std::string> ids, SplitRatios ratios = {}, std::uint64_t seed = 0);

// round(fraction * n) ids from one seeded shuffle of train_ids; for a fixed seed
// smaller fractions are prefixes of larger ones.
std::vector<std::string> subset_fraction(const std::vector<std::string>& train_ids, double fraction,
                                         std::uint64_t seed);

}  // namespace wseg::pipeline
