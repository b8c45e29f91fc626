#include "wseg/pipeline/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "wseg/error.hpp"

namespace wseg::pipeline {

nlohmann::json Splits::to_json() const {
  return {{"train", train},
          {"val", val},
          {"test", test},
          {"ratios", {{"train", ratios.train}, {"val", ratios.val}, {"test", ratios.test}}},
          {"seed", seed}};
}

Splits Splits::from_json(const nlohmann::json& j) {
  Splits s;
  try {
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("ratios")) {
      s.ratios.train = j["ratios"].value("train", 0.8);
      s.ratios.val = j["ratios"].value("val", 0.1);
      s.ratios.test = j["ratios"].value("test", 0.1);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed splits file: ") + e.what());
  }
  return s;
}

void Splits::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot write splits '" + file.string() + "'");
  out << to_json().dump(2) << "\n";
}

Splits Splits::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read splits '" + file.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("splits '" + file.string() + "': " + e.what());
  }
  return from_json(j);
}

Splits split_ids(std::vector<std::string> ids, SplitRatios ratios, std::uint64_t seed) {
  if (ids.empty()) throw ArgumentError("split_dataset: manifest is empty");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ArgumentError("split ratios must be non-negative and sum to 1");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = static_cast<double>(ids.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
  const std::size_t n_train = ids.size() - n_val - n_test;
  Splits s;
  s.ratios = ratios;
  s.seed = seed;
  s.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  s.val.assign(ids.begin() + static_cast<long>(n_train), ids.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<long>(n_train + n_val), ids.end());
  return s;
}

Splits split_dataset(const DatasetManifest& manifest, SplitRatios ratios, std::uint64_t seed) {
  return split_ids(manifest.ids(), ratios, seed);
}

std::vector<std::string> subset_fraction(const std::vector<std::string>& train_ids, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train_ids.size())));
  if (count == 0) {
    throw ArgumentError("fraction " + std::to_string(fraction) + " of " + std::to_string(train_ids.size()) +
                        " training ids selects nothing");
  }
  std::vector<std::string> ids = train_ids;
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(count);
  return ids;
}

}  // namespace wseg::pipeline
