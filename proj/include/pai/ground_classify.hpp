#pragma once

#include "pai/pointcloud.hpp"

namespace pai {

/// Simple Morphological Filter parameters, all lengths in cloud units.
struct SmrfParams {
  double cell_size = 1.0;
  double max_window = 18.0;
  double slope_threshold = 0.15;      // rise / run
  double elevation_threshold = 0.5;
  double elevation_scaling = 1.25;

  /// Reference defaults (1 m cells, 18 m window, 0.15 slope, 0.5 m, 1.25)
  /// expressed in `unit`.
  static SmrfParams defaults(LinearUnit unit);
  void validate() const;
};

/// Height-above-ground cutoffs in meters; upper bounds are inclusive.
struct VegetationTiers {
  double low_max = 0.5;
  double medium_max = 2.0;
  void validate() const;
};

/// Relabels every point Ground or Unclassified; geometry is untouched.
PointCloud classify_ground(const PointCloud& cloud, const SmrfParams& params);

/// Assigns Low/Medium/HighVegetation to every non-ground point by its height
/// above the ground surface interpolated from Ground points on a grid of
/// `surface_cell_m` meters.
PointCloud classify_vegetation(const PointCloud& cloud, const VegetationTiers& tiers,
                               double surface_cell_m = 1.0);

}  // namespace pai
