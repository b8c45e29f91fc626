#include "wseg/pipeline/manifest.hpp"

#include <fstream>
#include <set>

#include "wseg/error.hpp"

namespace wseg::pipeline {

const Sample& DatasetManifest::find(const std::string& image_id) const {
  for (const auto& s : samples)
    if (s.image_id == image_id) return s;
  throw NotFoundError("manifest has no sample '" + image_id + "'");
}

Sample& DatasetManifest::find(const std::string& image_id) {
  for (auto& s : samples)
    if (s.image_id == image_id) return s;
  throw NotFoundError("manifest has no sample '" + image_id + "'");
}

std::vector<std::string> DatasetManifest::ids() const {
  std::vector<std::string> out;
  for (const auto& s : samples) out.push_back(s.image_id);
  return out;
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  std::vector<std::string> missing;
  auto check = [&](const std::string& rel) {
    if (!std::filesystem::exists(resolve(rel))) missing.push_back(resolve(rel).string());
  };
  for (const auto& s : samples) {
    if (!seen.insert(s.image_id).second) throw ArgumentError("duplicate image_id '" + s.image_id + "' in manifest");
    check(s.image_path);
    if (s.face_mask_path) check(*s.face_mask_path);
    for (const auto& a : s.annotator_mask_paths) check(a);
    if (s.fused_gt_path) check(*s.fused_gt_path);
    if (s.weak_label_path) check(*s.weak_label_path);
    if (s.true_mask_path) check(*s.true_mask_path);
  }
  if (!missing.empty()) {
    std::string msg = "manifest references missing files:";
    for (const auto& m : missing) msg += " " + m;
    throw NotFoundError(msg);
  }
}

namespace {

void put_optional(nlohmann::json& j, const char* key, const std::optional<std::string>& v) {
  if (v) j[key] = *v;
}

std::optional<std::string> get_optional(const nlohmann::json& j, const char* key) {
  if (j.contains(key) && !j[key].is_null()) return j[key].get<std::string>();
  return std::nullopt;
}

}  // namespace

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : samples) {
    nlohmann::json j = {{"image_id", s.image_id},
                        {"image_path", s.image_path},
                        {"annotator_mask_paths", s.annotator_mask_paths}};
    put_optional(j, "face_mask_path", s.face_mask_path);
    put_optional(j, "fused_gt_path", s.fused_gt_path);
    put_optional(j, "weak_label_path", s.weak_label_path);
    put_optional(j, "true_mask_path", s.true_mask_path);
    arr.push_back(std::move(j));
  }
  return {{"format", "wseg-manifest/1"}, {"seed", seed}, {"samples", arr}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, std::filesystem::path root) {
  DatasetManifest m;
  m.root = std::move(root);
  try {
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& js : j.at("samples")) {
      Sample s;
      s.image_id = js.at("image_id").get<std::string>();
      s.image_path = js.at("image_path").get<std::string>();
      s.annotator_mask_paths = js.value("annotator_mask_paths", std::vector<std::string>{});
      s.face_mask_path = get_optional(js, "face_mask_path");
      s.fused_gt_path = get_optional(js, "fused_gt_path");
      s.weak_label_path = get_optional(js, "weak_label_path");
      s.true_mask_path = get_optional(js, "true_mask_path");
      m.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void DatasetManifest::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + file.string() + "'");
  out << to_json().dump(2) << "\n";
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read manifest '" + file.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + file.string() + "': " + e.what());
  }
  const auto dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  return from_json(j, dir);
}

}  // namespace wseg::pipeline
