#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "wseg/image.hpp"
#include "wseg/nn/graph.hpp"
#include "wseg/pipeline/manifest.hpp"
#include "wseg/weaklabel.hpp"

namespace wseg::pipeline {

struct ImageScore {
  std::string image_id;
  double jsi = 0.0;
  long intersection = 0;
  long union_ = 0;
};

struct MetricsReport {
  std::vector<ImageScore> per_image;
  double mean_jsi = 0.0;
  double pooled_jsi = 0.0;
  // Set when some image had an empty prediction and an empty GT (scored 1.0).
  bool empty_convention_used = false;
  nlohmann::json config = nlohmann::json::object();
  std::string checkpoint_id;

  nlohmann::json to_json() const;
  // image_id,jsi rows followed by "mean" and "pooled" footer rows.
  std::string to_csv() const;
  void save(const std::filesystem::path& out_dir) const;
};

// Aggregates per-image counts into mean-per-image and pooled JSI.
MetricsReport score_masks(const std::vector<std::string>& ids, const std::vector<BinaryMask>& predictions,
                          const std::vector<BinaryMask>& truths);

// GT in red, prediction in green over a dimmed grayscale copy of the image.
Image overlay(const Image& img, const BinaryMask& truth, const BinaryMask& prediction);

// Predicts every listed sample, scores it against its fused GT and, when
// out_dir is non-empty, writes metrics.json, metrics.csv and
// predictions/<id>.pred.png + overlays/<id>.overlay.png.
MetricsReport evaluate(nn::ModelGraph<float>& model, const DatasetManifest& manifest,
                       const std::vector<std::string>& ids, const TextureConfig& texture,
                       const std::filesystem::path& out_dir = {});

}  // namespace wseg::pipeline
