#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "wseg/image.hpp"
#include "wseg/pipeline/manifest.hpp"

namespace wseg::pipeline {

struct AnnotatorNoise {
  double drop_prob = 0.15;  // chance an annotator misses a stroke
  int jitter = 1;           // max translation in pixels per axis
  int morph_radius = 1;     // dilate or erode by up to this radius

  bool is_zero() const { return drop_prob == 0.0 && jitter == 0 && morph_radius == 0; }
};

struct SynthConfig {
  int count = 8;
  int size = 64;
  int n_annotators = 3;
  std::uint64_t seed = 0;
  int min_wrinkles = 2;
  int max_wrinkles = 6;
  AnnotatorNoise annotator_noise;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthSample {
  Image image;
  BinaryMask face;
  BinaryMask truth;
  std::vector<BinaryMask> strokes;     // per-stroke masks, clipped to the face
  std::vector<BinaryMask> annotators;
};

// Deterministic in (cfg, index).
SynthSample synth_sample(const SynthConfig& cfg, int index);

// Simulated annotator: drops strokes, shifts the mask by jitter and applies a
// random dilation or erosion.
BinaryMask simulate_annotator(const SynthSample& sample, const AnnotatorNoise& noise, std::uint64_t seed);

BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);
BinaryMask translate(const BinaryMask& m, int dx, int dy);

// Writes images/, faces/, truth/, annotations/ and manifest.json under out_dir.
DatasetManifest synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

std::string sample_id(int index);

}  // namespace wseg::pipeline
