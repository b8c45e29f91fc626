#include "wseg/weaklabel.hpp"

#include <string>

namespace wseg {

void TextureConfig::validate() const {
  if (!(sigma > 0.0)) throw ArgumentError("texture sigma must be > 0");
  if (!(scale > 0.0)) throw ArgumentError("texture scale must be > 0");
  if (binarize_threshold && !(*binarize_threshold > 0.0 && *binarize_threshold < 1.0)) {
    throw ArgumentError("binarize_threshold must lie in (0, 1)");
  }
}

nlohmann::json TextureConfig::to_json() const {
  nlohmann::json j = {{"sigma", sigma}, {"scale", scale}};
  j["binarize_threshold"] = binarize_threshold ? nlohmann::json(*binarize_threshold) : nlohmann::json(nullptr);
  return j;
}

TextureConfig TextureConfig::from_json(const nlohmann::json& j) {
  TextureConfig cfg;
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.scale = j.value("scale", cfg.scale);
  if (j.contains("binarize_threshold") && !j["binarize_threshold"].is_null()) {
    cfg.binarize_threshold = j["binarize_threshold"].get<double>();
  }
  cfg.validate();
  return cfg;
}

TextureMap extract_texture(const Image& img, const TextureConfig& cfg) {
  cfg.validate();
  const Plane gray = to_grayscale(img).plane(0);
  const Plane blurred = gaussian_blur<float>(gray, cfg.sigma);
  const float inv_scale = static_cast<float>(1.0 / cfg.scale);
  return TextureMap(((gray - blurred).abs() * inv_scale).cwiseMin(1.0f).cwiseMax(0.0f));
}

TextureMap apply_face_mask(const TextureMap& t, const BinaryMask& face) {
  if (t.height() != face.height() || t.width() != face.width()) {
    throw ArgumentError("apply_face_mask: texture " + std::to_string(t.height()) + "x" + std::to_string(t.width()) +
                        " vs face mask " + std::to_string(face.height()) + "x" + std::to_string(face.width()));
  }
  return TextureMap((face.data != 0).select(t.data, 0.0f));
}

BinaryMask fallback_face_mask(int height, int width) {
  BinaryMask mask(height, width);
  const double ax = 0.42 * width;
  const double ay = 0.46 * height;
  for (int y = 0; y < height; ++y) {
    const double dy = (y + 0.5 - 0.5 * height) / ay;
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - 0.5 * width) / ax;
      mask(y, x) = dx * dx + dy * dy <= 1.0 ? 1 : 0;
    }
  }
  return mask;
}

BinaryMask fallback_face_mask(const Image& img) { return fallback_face_mask(img.height(), img.width()); }

BinaryMask binarize_texture(const TextureMap& t, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ArgumentError("binarize threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  return BinaryMask((t.data >= static_cast<float>(threshold)).cast<std::uint8_t>());
}

TextureMap make_weak_label(const Image& img, const BinaryMask* face, const TextureConfig& cfg) {
  const TextureMap t = extract_texture(img, cfg);
  return face ? apply_face_mask(t, *face) : apply_face_mask(t, fallback_face_mask(img));
}

}  // namespace wseg
