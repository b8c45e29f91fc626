#pragma once

#include <filesystem>

#include <json.hpp>

#include "wseg/fusion.hpp"
#include "wseg/image.hpp"
#include "wseg/pipeline/manifest.hpp"
#include "wseg/weaklabel.hpp"

namespace wseg::pipeline {

Image load_sample_image(const DatasetManifest& m, const Sample& s);
// The sample's face mask file, or the ellipse fallback when it has none.
BinaryMask load_face_mask(const DatasetManifest& m, const Sample& s, const Image& img);
BinaryMask load_fused_gt(const DatasetManifest& m, const Sample& s);
AnnotationSet load_annotations(const DatasetManifest& m, const Sample& s);

// Masked texture map computed from the image; the finetune texture channel.
TextureMap texture_channel(const DatasetManifest& m, const Sample& s, const Image& img, const TextureConfig& cfg);

// Pretraining target: the stored weak label when present, else computed on the fly.
TextureMap weak_label_for(const DatasetManifest& m, const Sample& s, const Image& img, const TextureConfig& cfg);

// Majority-votes every sample's annotators into annotations/<id>.gt.png and
// records fused_gt_path. Returns {"k", "per_image": {id: agreement}, "mean_offdiag"}.
nlohmann::json fuse_manifest(DatasetManifest& m, int k);

// Writes weak/<id>.texture.png for every sample and records weak_label_path.
void weaklabel_manifest(DatasetManifest& m, const TextureConfig& cfg);

}  // namespace wseg::pipeline
