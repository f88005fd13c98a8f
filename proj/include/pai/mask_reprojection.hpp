#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pai/feature_class.hpp"
#include "pai/pointcloud.hpp"
#include "pai/polygon.hpp"
#include "pai/raster.hpp"
#include "pai/segmentation.hpp"

namespace pai {

/// Mask outline in world coordinates (y north), outer ring counterclockwise.
struct GeoPolygon {
  Polygon polygon;
  FeatureClass feature_class = FeatureClass::Sidewalk;
  std::vector<RepresentationId> sources;
  std::string crs_id;
  bool operator==(const GeoPolygon&) const = default;
};

/// Maps every vertex (pixel-centre coordinates) through the raster's
/// geotransform. Vertex count and orientation as displayed are preserved.
/// Throws ErrorKind::MissingAttribute without a geotransform.
GeoPolygon bev_mask_to_geo(const MaskAnnotation& mask, const std::optional<Geotransform>& geo,
                           const std::string& crs_id);

struct LabelVote {
  uint32_t point_index = 0;
  FeatureClass feature_class = FeatureClass::Sidewalk;
  bool operator==(const LabelVote&) const = default;
  auto operator<=>(const LabelVote&) const = default;
};

/// Points behind the mask: every populated correspondence pixel whose centre
/// lies inside the polygon (even-odd, half-open). Sorted by point index, one
/// entry per point. Throws ErrorKind::InvalidArgument when the map and the
/// masked image differ in size.
std::vector<LabelVote> street_mask_to_points(const MaskAnnotation& mask, const CorrespondenceMap& cmap,
                                             int image_width, int image_height);

/// Votes of one view: the union over its masks, one vote per (point, class).
std::vector<LabelVote> view_votes(const std::vector<MaskAnnotation>& masks, const CorrespondenceMap& cmap,
                                  int image_width, int image_height);

struct TallyEntry {
  uint32_t point_index = 0;
  FeatureClass feature_class = FeatureClass::Sidewalk;
  uint32_t votes = 0;
  bool operator==(const TallyEntry&) const = default;
};

struct LabeledCloud {
  std::vector<std::optional<FeatureClass>> labels;  // one per point
  std::vector<TallyEntry> tally;                    // sparse, sorted by (point, class)

  std::vector<TallyEntry> tally_of(uint32_t point_index) const;
  std::size_t labeled_count() const;
  bool operator==(const LabeledCloud&) const = default;
};

/// Tallies votes over all views, counting each (point, class) at most once per
/// view. A point takes the class with the most votes when that count reaches
/// min_votes; ties go to tie_break_less. Throws ErrorKind::InvalidArgument for
/// min_votes < 1 or a point index outside the cloud.
LabeledCloud pool_labels(const std::vector<std::vector<LabelVote>>& views, std::size_t point_count,
                         uint32_t min_votes = 1);

struct InventoryFiles {
  std::filesystem::path geojson;
  std::filesystem::path las;
  std::filesystem::path label_map;
};

/// inventory.geojson (one feature per polygon), labeled.las (LAS 1.4, class
/// code of the pooled label, original class code for unlabeled points) and
/// label_map.json (class code table). Throws ErrorKind::InvalidArgument when
/// the label count differs from the cloud size.
InventoryFiles export_inventory(const std::vector<GeoPolygon>& polygons, const LabeledCloud& labeled,
                                const PointCloud& cloud, const std::filesystem::path& out_dir);

std::string inventory_geojson(const std::vector<GeoPolygon>& polygons, const std::string& crs_id);
std::string label_map_json();

/// Pooled labels read back from a labeled LAS file (codes outside the table are unlabeled).
std::vector<std::optional<FeatureClass>> import_labels(const std::filesystem::path& las_path);

}  // namespace pai
