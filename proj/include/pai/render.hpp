#pragma once

#include <optional>
#include <span>

#include "pai/camera.hpp"
#include "pai/pointcloud.hpp"
#include "pai/raster.hpp"

namespace pai {

/// Linear intensity-to-gray map clamped to [0, 255]; `lo`/`hi` are the 2nd and
/// 98th intensity percentiles of the points being rendered.
struct GrayMapping {
  double lo = 0.0;
  double hi = 65535.0;
  uint8_t operator()(uint16_t intensity) const;
};

GrayMapping intensity_mapping(const PointCloud& cloud, std::span<const uint32_t> indices);

struct RenderResult {
  RasterImage image;
  CorrespondenceMap correspondence;
};

/// Raster size for an extent: ceil(width / cell) x ceil(height / cell), at least 1 x 1.
std::pair<int, int> bev_dimensions(const Extent2D& box, double cell_size);

/// Top-down ortho raster. Each cell shows the highest point of the selected
/// classes (ties to the lower index); the geotransform anchors at the cloud
/// extent's top-left corner.
RenderResult render_bev(const PointCloud& cloud, ClassSelector selector, PixelAttribute attribute,
                        double cell_size);

/// Synthetic pinhole view. Every visible point splats a point_size x
/// point_size square around its projected pixel; a z-buffer keeps the
/// smallest depth (ties to the lower index).
RenderResult render_street_view(const PointCloud& cloud, ClassSelector selector,
                                PixelAttribute attribute, const CameraIntrinsics& intr,
                                const CameraPose& pose, int point_size_px);

/// Source point recorded at (col, row), or nullopt for no-data pixels.
/// Throws ErrorKind::Bounds for pixels outside the map.
std::optional<LidarPoint> back_project(long col, long row, const CorrespondenceMap& cmap,
                                       const PointCloud& cloud);

}  // namespace pai
