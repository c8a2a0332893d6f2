#include "reflectdepth/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "reflectdepth/io.hpp"

namespace reflectdepth {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json camera_to_json(const Camera& cam) {
  const Intrinsics& k = cam.intrinsics;
  ordered_json j;
  j["K"] = {k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0};
  std::vector<double> pose(16, 0.0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose[4 * r + c] = cam.pose.rotation(r, c);
  }
  pose[3] = cam.pose.translation.x;
  pose[7] = cam.pose.translation.y;
  pose[11] = cam.pose.translation.z;
  pose[15] = 1.0;
  j["pose"] = pose;
  return j;
}

Camera camera_from_json(const ordered_json& j) {
  auto kv = j.at("K").get<std::vector<double>>();
  auto pv = j.at("pose").get<std::vector<double>>();
  if (kv.size() != 9) throw FormatError("manifest: K must have 9 entries");
  if (pv.size() != 16) throw FormatError("manifest: pose must have 16 entries");
  Camera cam;
  cam.intrinsics = Intrinsics{kv[0], kv[4], kv[2], kv[5]};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = pv[4 * r + c];
  cam.pose.translation = {pv[3], pv[7], pv[11]};
  cam.validate();
  return cam;
}

ordered_json frame_to_json(const FrameRecord& f) {
  ordered_json j;
  j["image"] = f.image_path;
  ordered_json cam = camera_to_json(f.camera);
  j["K"] = cam["K"];
  j["pose"] = cam["pose"];
  if (f.residual_path) j["residual"] = *f.residual_path;
  return j;
}

FrameRecord frame_from_json(const ordered_json& j) {
  FrameRecord f;
  f.image_path = j.at("image").get<std::string>();
  f.camera = camera_from_json(j);
  if (j.contains("residual"))
    f.residual_path = j.at("residual").get<std::string>();
  return f;
}

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path.string();
  return (base / path).string();
}

}  // namespace

void SequenceManifest::validate() const {
  if (sources.empty())
    throw InvalidArgument("manifest: at least one source frame required");
  reference.camera.validate();
  for (const auto& s : sources) s.camera.validate();
}

SequenceManifest load_manifest(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("manifest: cannot open " + path);
  ordered_json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: bad JSON: ") + e.what());
  }
  try {
    SequenceManifest m;
    m.reference = frame_from_json(j.at("reference"));
    for (const auto& s : j.at("sources")) m.sources.push_back(frame_from_json(s));
    if (j.contains("gt_depth")) m.gt_depth_path = j.at("gt_depth").get<std::string>();
    if (j.contains("gt_mask")) m.gt_mask_path = j.at("gt_mask").get<std::string>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: missing or malformed field: ") +
                      e.what());
  }
}

void save_manifest(const SequenceManifest& manifest, const std::string& path) {
  manifest.validate();
  ordered_json j;
  j["reference"] = frame_to_json(manifest.reference);
  j["sources"] = ordered_json::array();
  for (const auto& s : manifest.sources) j["sources"].push_back(frame_to_json(s));
  if (manifest.gt_depth_path) j["gt_depth"] = *manifest.gt_depth_path;
  if (manifest.gt_mask_path) j["gt_mask"] = *manifest.gt_mask_path;
  std::ofstream file(path);
  if (!file) throw IoError("manifest: cannot open for writing " + path);
  file << j.dump(2) << "\n";
}

LoadedSequence load_sequence(const std::string& manifest_path) {
  SequenceManifest m = load_manifest(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();

  auto load_frame = [&](const FrameRecord& f) {
    LoadedFrame lf{load_png(resolve(base, f.image_path)), f.camera, {}};
    if (f.residual_path) {
      ImageBuffer r = load_pfm(resolve(base, *f.residual_path));
      if (r.channels != 1)
        throw FormatError("manifest: residual rasters must be 1-channel");
      lf.residual = std::move(r);
    }
    return lf;
  };

  LoadedSequence seq;
  seq.reference = load_frame(m.reference);
  for (const auto& s : m.sources) seq.sources.push_back(load_frame(s));
  for (const auto& s : seq.sources)
    if (!s.image.same_shape(seq.reference.image))
      throw DimensionMismatch("manifest: frames must share image dimensions");
  if (m.gt_depth_path)
    seq.gt_depth = load_depth_pfm(resolve(base, *m.gt_depth_path));
  if (m.gt_mask_path)
    seq.gt_mask = load_mask_png(resolve(base, *m.gt_mask_path));
  return seq;
}

}  // namespace reflectdepth
