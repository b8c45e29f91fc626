#include "wseg/pipeline/dataset_ops.hpp"

#include "wseg/image_io.hpp"

namespace wseg::pipeline {

Image load_sample_image(const DatasetManifest& m, const Sample& s) { return load_image(m.resolve(s.image_path)); }

BinaryMask load_face_mask(const DatasetManifest& m, const Sample& s, const Image& img) {
  if (s.face_mask_path) {
    BinaryMask face = load_mask(m.resolve(*s.face_mask_path));
    if (face.height() != img.height() || face.width() != img.width()) {
      throw FormatError("face mask '" + *s.face_mask_path + "' does not match image size");
    }
    return face;
  }
  return fallback_face_mask(img);
}

BinaryMask load_fused_gt(const DatasetManifest& m, const Sample& s) {
  if (!s.fused_gt_path) throw NotFoundError("sample '" + s.image_id + "' has no fused ground truth");
  return load_mask(m.resolve(*s.fused_gt_path));
}

AnnotationSet load_annotations(const DatasetManifest& m, const Sample& s) {
  AnnotationSet ann;
  ann.image_id = s.image_id;
  for (const auto& p : s.annotator_mask_paths) ann.masks.push_back(load_mask(m.resolve(p)));
  if (ann.masks.empty()) {
    const auto dir = m.resolve(s.image_path).parent_path().parent_path() / "annotations";
    return load_annotation_set(dir, s.image_id);
  }
  for (std::size_t i = 1; i < ann.masks.size(); ++i) {
    if (ann.masks[i].height() != ann.masks[0].height() || ann.masks[i].width() != ann.masks[0].width()) {
      throw FormatError("annotator mask '" + s.annotator_mask_paths[i] + "' dimensions differ from '" +
                        s.annotator_mask_paths[0] + "'");
    }
  }
  return ann;
}

TextureMap texture_channel(const DatasetManifest& m, const Sample& s, const Image& img, const TextureConfig& cfg) {
  const BinaryMask face = load_face_mask(m, s, img);
  return make_weak_label(img, &face, cfg);
}

TextureMap weak_label_for(const DatasetManifest& m, const Sample& s, const Image& img, const TextureConfig& cfg) {
  if (s.weak_label_path) return load_texture(m.resolve(*s.weak_label_path));
  return texture_channel(m, s, img, cfg);
}

nlohmann::json fuse_manifest(DatasetManifest& m, int k) {
  std::filesystem::create_directories(m.root / "annotations");
  nlohmann::json per_image = nlohmann::json::object();
  double sum = 0.0;
  int counted = 0;
  for (auto& s : m.samples) {
    const AnnotationSet ann = load_annotations(m, s);
    const BinaryMask fused = majority_vote(ann, k);
    const std::string rel = "annotations/" + fused_mask_path("", s.image_id).filename().string();
    save_image(fused, m.resolve(rel));
    s.fused_gt_path = rel;
    if (ann.size() >= 2) {
      const AgreementReport r = pairwise_agreement(ann);
      per_image[s.image_id] = r.to_json();
      sum += r.mean_offdiag;
      ++counted;
    }
  }
  return {{"k", k}, {"per_image", per_image}, {"mean_offdiag", counted ? sum / counted : 1.0}};
}

void weaklabel_manifest(DatasetManifest& m, const TextureConfig& cfg) {
  std::filesystem::create_directories(m.root / "weak");
  for (auto& s : m.samples) {
    const Image img = load_sample_image(m, s);
    const TextureMap t = texture_channel(m, s, img, cfg);
    const std::string rel = "weak/" + s.image_id + ".texture.png";
    save_image(t, m.resolve(rel));
    if (cfg.binarize_threshold) save_image(binarize_texture(t, *cfg.binarize_threshold), m.resolve("weak/" + s.image_id + ".texture_bin.png"));
    s.weak_label_path = rel;
  }
}

}  // namespace wseg::pipeline
