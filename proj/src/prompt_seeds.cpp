#include "pai/prompt_seeds.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "pai/error.hpp"

namespace pai {
namespace {

bool shows(const CorrespondenceMap& cmap, long col, long row, const PointCloud& cloud, const Eigen::Vector3d& p,
           double tolerance) {
  if (!cmap.in_bounds(col, row)) return false;
  const auto hit = cmap.at(static_cast<int>(col), static_cast<int>(row));
  if (!hit) return false;
  const auto i = static_cast<std::size_t>(hit->point_index);
  return (Eigen::Vector3d(cloud.x(i), cloud.y(i), cloud.z(i)) - p).norm() <= tolerance;
}

}  // namespace

std::string seeds_json(const std::vector<PromptSeed>& seeds) {
  nlohmann::json doc;
  doc["seeds"] = nlohmann::json::array();
  for (const auto& s : seeds) {
    doc["seeds"].push_back({{"class", snake_name(s.feature_class)},
                            {"x", s.position.x()},
                            {"y", s.position.y()},
                            {"z", s.position.z()},
                            {"positive", s.positive}});
  }
  return doc.dump(1) + "\n";
}

std::vector<PromptSeed> parse_seeds_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("prompt seeds: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("seeds") || !doc["seeds"].is_array()) {
    throw Error(ErrorKind::Parse, "prompt seeds: expected {\"seeds\": [...]}");
  }
  std::vector<PromptSeed> out;
  for (const auto& s : doc["seeds"]) {
    try {
      const auto c = parse_feature_class(s.at("class").get<std::string>());
      if (!c) throw Error(ErrorKind::Parse, "prompt seeds: unknown class '" + s.at("class").get<std::string>() + "'");
      out.push_back({*c, Eigen::Vector3d(s.at("x").get<double>(), s.at("y").get<double>(), s.at("z").get<double>()),
                     s.value("positive", true)});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("prompt seeds: ") + e.what());
    }
  }
  return out;
}

std::vector<PromptPoint> bev_prompts(const std::vector<PromptSeed>& seeds, FeatureClass c, const Geotransform& geo,
                                     const CorrespondenceMap& cmap, const PointCloud& cloud, double tolerance) {
  std::vector<PromptPoint> out;
  for (const auto& s : seeds) {
    if (s.feature_class != c) continue;
    auto [col, row] = geo.pixel_of(s.position.x(), s.position.y());
    col = std::clamp<long>(col, 0, cmap.width() - 1);  // the max edge belongs to the last cell, as in render_bev
    row = std::clamp<long>(row, 0, cmap.height() - 1);
    if (shows(cmap, col, row, cloud, s.position, tolerance)) {
      out.push_back({double(col), double(row), s.positive});
    }
  }
  return out;
}

std::vector<PromptPoint> view_prompts(const std::vector<PromptSeed>& seeds, FeatureClass c,
                                      const CameraIntrinsics& intr, const CameraPose& pose,
                                      const CorrespondenceMap& cmap, const PointCloud& cloud, double tolerance) {
  std::vector<PromptPoint> out;
  for (const auto& s : seeds) {
    if (s.feature_class != c) continue;
    const auto px = project_point(s.position, intr, pose);
    if (!px) continue;
    const double col = std::floor(px->u + 0.5), row = std::floor(px->v + 0.5);
    if (!(std::abs(col) < 1e9 && std::abs(row) < 1e9)) continue;
    if (shows(cmap, static_cast<long>(col), static_cast<long>(row), cloud, s.position, tolerance)) {
      out.push_back({col, row, s.positive});
    }
  }
  return out;
}

std::vector<PromptPoint> ortho_prompts(const std::vector<PromptSeed>& seeds, FeatureClass c, const RasterImage& image) {
  if (!image.geo) throw Error(ErrorKind::MissingAttribute, "ortho image has no geotransform");
  std::vector<PromptPoint> out;
  if (group_of(c) != FeatureGroup::Planimetric) return out;
  for (const auto& s : seeds) {
    if (s.feature_class != c) continue;
    const auto [col, row] = image.geo->pixel_of(s.position.x(), s.position.y());
    if (image.in_bounds(col, row)) out.push_back({double(col), double(row), s.positive});
  }
  return out;
}

std::vector<FeatureClass> seeded_classes(const std::vector<PromptSeed>& seeds) {
  std::set<FeatureClass> present;
  for (const auto& s : seeds) present.insert(s.feature_class);
  return {present.begin(), present.end()};
}

}  // namespace pai
