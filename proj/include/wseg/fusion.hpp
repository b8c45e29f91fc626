#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "wseg/image.hpp"

namespace wseg {

struct AnnotationSet {
  std::string image_id;
  std::vector<BinaryMask> masks;

  int size() const { return static_cast<int>(masks.size()); }
  // Throws ArgumentError when the set is empty or masks disagree in size.
  void validate() const;
};

struct AgreementReport {
  Eigen::MatrixXd pairwise_jsi;
  double mean_offdiag = 0.0;

  nlohmann::json to_json() const;
};

// Pixel is 1 iff at least k of the n annotators marked it. k = 2 of 3 is the
// usual panel rule; n = 1 with k = 1 is a pass-through.
BinaryMask majority_vote(const AnnotationSet& ann, int k = 2);

AgreementReport pairwise_agreement(const AnnotationSet& ann);

// Loads <dir>/<image_id>.a1.png, .a2.png, ... until the first missing index.
AnnotationSet load_annotation_set(const std::filesystem::path& dir, const std::string& image_id);

std::filesystem::path annotator_mask_path(const std::filesystem::path& dir, const std::string& image_id, int index);
std::filesystem::path fused_mask_path(const std::filesystem::path& dir, const std::string& image_id);

}  // namespace wseg
