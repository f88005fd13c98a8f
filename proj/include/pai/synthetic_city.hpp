#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pai/feature_class.hpp"
#include "pai/pointcloud.hpp"
#include "pai/prompt_seeds.hpp"
#include "pai/raster.hpp"
#include "pai/trajectory.hpp"

namespace pai {

struct CityOptions {
  double origin_x = 985000.0;  // south-west corner, EPSG:2263 feet
  double origin_y = 200000.0;
  double spacing = 0.1;        // ground lattice pitch in feet
  double grade = 0.01;         // rise over run along +x
  double crossfall = 0.02;     // sidewalk slope down toward the road
};

/// One street block in feet: 100 ft along x, 50 ft across.
///   y  0 -  3  planting strip with two trees
///   y  3 - 10  south sidewalk, 0.5 ft curb, hydrant
///   y 10 - 40  road, crosswalk at x 45 - 55
///   y 40 - 47  north sidewalk, two posts
///   y 47 - 50  planting strip with one tree
/// Every point starts Unclassified. `truth` holds the feature class each
/// point was built from (road and curb faces have none).
struct SyntheticCity {
  PointCloud cloud;
  std::vector<std::optional<FeatureClass>> truth;
  Trajectory trajectory{{{0, 0, 0, 0}, {1, 0, 0, 1}}};
  std::vector<PromptSeed> seeds;
  Extent2D extent;
};

SyntheticCity make_synthetic_city(const CityOptions& options = {});

/// Top-down color image of the block (Rep5 stand-in) at `cell` feet per pixel.
RasterImage synthetic_orthophoto(const SyntheticCity& city, double cell);

}  // namespace pai
