#include "wseg/fusion.hpp"

#include "wseg/image_io.hpp"
#include "wseg/metrics.hpp"

namespace wseg {

void AnnotationSet::validate() const {
  if (masks.empty()) throw ArgumentError("annotation set '" + image_id + "' has no masks");
  for (std::size_t i = 1; i < masks.size(); ++i) {
    if (masks[i].height() != masks[0].height() || masks[i].width() != masks[0].width()) {
      throw ArgumentError("annotation set '" + image_id + "': mask " + std::to_string(i + 1) +
                          " dimensions differ from mask 1");
    }
  }
}

nlohmann::json AgreementReport::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (Eigen::Index i = 0; i < pairwise_jsi.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < pairwise_jsi.cols(); ++j) row.push_back(pairwise_jsi(i, j));
    m.push_back(row);
  }
  return {{"pairwise_jsi", m}, {"mean_offdiag", mean_offdiag}};
}

BinaryMask majority_vote(const AnnotationSet& ann, int k) {
  ann.validate();
  if (k < 1 || k > ann.size()) {
    throw ArgumentError("majority_vote: k=" + std::to_string(k) + " outside [1, " + std::to_string(ann.size()) + "]");
  }
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> votes =
      Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(ann.masks[0].height(),
                                                                               ann.masks[0].width());
  for (const BinaryMask& m : ann.masks) votes += m.data.cast<int>();
  return BinaryMask((votes >= k).cast<std::uint8_t>());
}

AgreementReport pairwise_agreement(const AnnotationSet& ann) {
  ann.validate();
  if (ann.size() < 2) throw ArgumentError("pairwise_agreement needs at least two annotators");
  const int n = ann.size();
  AgreementReport report;
  report.pairwise_jsi = Eigen::MatrixXd::Identity(n, n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    report.pairwise_jsi(i, i) = jsi(ann.masks[i], ann.masks[i]);
    for (int j = i + 1; j < n; ++j) {
      const double v = jsi(ann.masks[i], ann.masks[j]);
      report.pairwise_jsi(i, j) = report.pairwise_jsi(j, i) = v;
      sum += 2.0 * v;
    }
  }
  report.mean_offdiag = sum / (n * (n - 1));
  return report;
}

std::filesystem::path annotator_mask_path(const std::filesystem::path& dir, const std::string& image_id, int index) {
  return dir / (image_id + ".a" + std::to_string(index) + ".png");
}

std::filesystem::path fused_mask_path(const std::filesystem::path& dir, const std::string& image_id) {
  return dir / (image_id + ".gt.png");
}

AnnotationSet load_annotation_set(const std::filesystem::path& dir, const std::string& image_id) {
  AnnotationSet ann;
  ann.image_id = image_id;
  for (int i = 1;; ++i) {
    const auto path = annotator_mask_path(dir, image_id, i);
    if (!std::filesystem::exists(path)) break;
    ann.masks.push_back(load_mask(path));
    if (ann.masks.back().height() != ann.masks.front().height() ||
        ann.masks.back().width() != ann.masks.front().width()) {
      throw FormatError("annotator mask '" + path.string() + "' dimensions differ from '" +
                        annotator_mask_path(dir, image_id, 1).string() + "'");
    }
  }
  if (ann.masks.empty()) {
    throw NotFoundError("no annotator masks '" + image_id + ".a<i>.png' found in '" + dir.string() + "'");
  }
  return ann;
}

}  // namespace wseg
