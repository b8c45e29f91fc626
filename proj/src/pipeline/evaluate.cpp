#include "wseg/pipeline/evaluate.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "wseg/error.hpp"
#include "wseg/image_io.hpp"
#include "wseg/metrics.hpp"
#include "wseg/pipeline/dataset_ops.hpp"
#include "wseg/unet.hpp"

namespace wseg::pipeline {

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : per_image) {
    rows.push_back({{"image_id", s.image_id}, {"jsi", s.jsi}, {"intersection", s.intersection}, {"union", s.union_}});
  }
  return {{"per_image", rows},
          {"mean_jsi", mean_jsi},
          {"pooled_jsi", pooled_jsi},
          {"empty_convention_used", empty_convention_used},
          {"config", config},
          {"checkpoint_id", checkpoint_id}};
}

std::string MetricsReport::to_csv() const {
  std::string out = "image_id,jsi\n";
  for (const auto& s : per_image) out += s.image_id + "," + fmt6(s.jsi) + "\n";
  out += "mean," + fmt6(mean_jsi) + "\n";
  out += "pooled," + fmt6(pooled_jsi) + "\n";
  return out;
}

void MetricsReport::save(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  std::ofstream j(out_dir / "metrics.json", std::ios::binary);
  j << to_json().dump(2) << "\n";
  std::ofstream c(out_dir / "metrics.csv", std::ios::binary);
  c << to_csv();
  if (!j || !c) throw IoError("cannot write metrics into " + out_dir.string());
}

MetricsReport score_masks(const std::vector<std::string>& ids, const std::vector<BinaryMask>& predictions,
                          const std::vector<BinaryMask>& truths) {
  if (ids.size() != predictions.size() || ids.size() != truths.size()) {
    throw ArgumentError("score_masks: ids, predictions and truths differ in length");
  }
  if (ids.empty()) throw ArgumentError("score_masks: nothing to score");
  MetricsReport r;
  long inter = 0;
  long uni = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const OverlapCounts c = overlap_counts(predictions[i], truths[i]);
    ImageScore s{ids[i], jsi(predictions[i], truths[i]), c.intersection, c.union_};
    if (c.union_ == 0) r.empty_convention_used = true;
    inter += c.intersection;
    uni += c.union_;
    sum += s.jsi;
    r.per_image.push_back(s);
  }
  r.mean_jsi = sum / static_cast<double>(ids.size());
  r.pooled_jsi = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  return r;
}

Image overlay(const Image& img, const BinaryMask& truth, const BinaryMask& prediction) {
  const Plane g = to_grayscale(img).plane(0) * 0.5f;
  if (truth.height() != g.rows() || truth.width() != g.cols() || prediction.height() != g.rows() ||
      prediction.width() != g.cols()) {
    throw ArgumentError("overlay: mask and image sizes differ");
  }
  Plane r = g;
  Plane gr = g;
  for (int y = 0; y < g.rows(); ++y) {
    for (int x = 0; x < g.cols(); ++x) {
      if (truth(y, x)) r(y, x) = 1.0f;
      if (prediction(y, x)) gr(y, x) = 1.0f;
    }
  }
  const std::array<Plane, 3> planes{r, gr, g};
  return Image::from_planes(planes);
}

MetricsReport evaluate(nn::ModelGraph<float>& model, const DatasetManifest& manifest,
                       const std::vector<std::string>& ids, const TextureConfig& texture,
                       const std::filesystem::path& out_dir) {
  if (model.stage != nn::Stage::finetune || model.input_channels() != 4 || model.output_channels() != 2) {
    throw UsageError("evaluate needs a finetune-stage 4->2 checkpoint, got stage '" + nn::to_string(model.stage) + "'");
  }
  std::vector<BinaryMask> preds;
  std::vector<BinaryMask> truths;
  const bool write = !out_dir.empty();
  if (write) {
    std::filesystem::create_directories(out_dir / "predictions");
    std::filesystem::create_directories(out_dir / "overlays");
  }
  for (const auto& id : ids) {
    const Sample& s = manifest.find(id);
    const Image img = load_sample_image(manifest, s);
    const WrinklePrediction p = predict_wrinkles(model, img, texture_channel(manifest, s, img, texture));
    BinaryMask gt = load_fused_gt(manifest, s);
    if (write) {
      save_image(p.mask, out_dir / "predictions" / (id + ".pred.png"));
      save_image(overlay(img, gt, p.mask), out_dir / "overlays" / (id + ".overlay.png"));
    }
    preds.push_back(p.mask);
    truths.push_back(std::move(gt));
  }
  MetricsReport r = score_masks(ids, preds, truths);
  r.config = {{"texture", texture.to_json()}, {"n_images", ids.size()}};
  if (write) r.save(out_dir);
  return r;
}

}  // namespace wseg::pipeline
