#pragma once

#include <optional>

#include <json.hpp>

#include "wseg/image.hpp"

namespace wseg {

struct TextureConfig {
  double sigma = 2.0;   // Gaussian sigma in pixels
  double scale = 0.2;   // residual magnitude mapped to 1.0
  std::optional<double> binarize_threshold;

  void validate() const;
  nlohmann::json to_json() const;
  static TextureConfig from_json(const nlohmann::json& j);
};

// Clamped, scaled magnitude of the Gaussian high-pass residual of the luma channel:
// t = clamp(|g - blur(g, sigma)| / scale, 0, 1).
TextureMap extract_texture(const Image& img, const TextureConfig& cfg = {});

// Zeroes the map wherever the face mask is 0.
TextureMap apply_face_mask(const TextureMap& t, const BinaryMask& face);

// Crude stand-in for a face parser: a centred ellipse with semi-axes 0.42 W and 0.46 H,
// evaluated at pixel centres.
BinaryMask fallback_face_mask(const Image& img);
BinaryMask fallback_face_mask(int height, int width);

BinaryMask binarize_texture(const TextureMap& t, double threshold);

// extract_texture followed by apply_face_mask; uses the ellipse fallback when no face mask is given.
TextureMap make_weak_label(const Image& img, const BinaryMask* face, const TextureConfig& cfg = {});

}  // namespace wseg
