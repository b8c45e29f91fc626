#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace wseg::pipeline {

// One image and its labels. Paths are relative to the manifest root.
struct Sample {
  std::string image_id;
  std::string image_path;
  std::optional<std::string> face_mask_path;
  std::vector<std::string> annotator_mask_paths;
  std::optional<std::string> fused_gt_path;
  std::optional<std::string> weak_label_path;
  std::optional<std::string> true_mask_path;  // synthetic data only
};

// JSON schema:
//   {"format": "wseg-manifest/1", "seed": <u64>,
//    "samples": [{"image_id", "image_path", "face_mask_path"?, "annotator_mask_paths": [...],
//                 "fused_gt_path"?, "weak_label_path"?, "true_mask_path"?}, ...]}
// The root is the directory holding the manifest file and is not serialised.
struct DatasetManifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;

  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
  const Sample& find(const std::string& image_id) const;
  Sample& find(const std::string& image_id);
  std::vector<std::string> ids() const;

  // Unique ids; every referenced file must exist. Throws ArgumentError / NotFoundError.
  void validate() const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j, std::filesystem::path root);

  void save(const std::filesystem::path& file) const;
  static DatasetManifest load(const std::filesystem::path& file);
};

}  // namespace wseg::pipeline
