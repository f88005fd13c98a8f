#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pai/camera.hpp"
#include "pai/feature_class.hpp"
#include "pai/pointcloud.hpp"
#include "pai/raster.hpp"
#include "pai/segmentation.hpp"

namespace pai {

/// A world-space prompt: the point an operator would click, with the class it stands for.
struct PromptSeed {
  FeatureClass feature_class = FeatureClass::Sidewalk;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool positive = true;
};

/// {"seeds": [{"class": "sidewalk", "x", "y", "z", "positive"}]}
std::string seeds_json(const std::vector<PromptSeed>& seeds);
/// Throws ErrorKind::Parse on malformed documents or unknown classes.
std::vector<PromptSeed> parse_seeds_json(const std::string& text);

/// Pixel prompts for the seeds of class `c` that an image actually shows: the
/// seed's pixel must hold a point within `tolerance` (cloud units, 3D) of the
/// seed, so seeds hidden behind other surfaces are left out.
std::vector<PromptPoint> bev_prompts(const std::vector<PromptSeed>& seeds, FeatureClass c, const Geotransform& geo,
                                     const CorrespondenceMap& cmap, const PointCloud& cloud, double tolerance);
std::vector<PromptPoint> view_prompts(const std::vector<PromptSeed>& seeds, FeatureClass c,
                                      const CameraIntrinsics& intr, const CameraPose& pose,
                                      const CorrespondenceMap& cmap, const PointCloud& cloud, double tolerance);
/// Georeferenced imagery without depth: planimetric seeds inside the raster.
std::vector<PromptPoint> ortho_prompts(const std::vector<PromptSeed>& seeds, FeatureClass c, const RasterImage& image);

/// Classes with at least one seed, in table order.
std::vector<FeatureClass> seeded_classes(const std::vector<PromptSeed>& seeds);

}  // namespace pai
