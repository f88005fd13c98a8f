#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pai/http.hpp"
#include "pai/pointcloud.hpp"
#include "pai/raster.hpp"

namespace pai {

enum class AxisOrder { Auto, EastNorth, NorthEast };

/// True for CRSs whose EPSG axis order is northing (or latitude) first, which
/// WMS 1.3.0 honours in BBOX.
bool crs_northing_first(const std::string& crs_id);

struct WmsRequest {
  std::string endpoint;
  std::string layer;
  std::string crs_id;
  Extent2D bbox;
  int width = 0;
  int height = 0;
  std::string format = "image/png";
  std::string style;
  AxisOrder axis_order = AxisOrder::Auto;
};

/// GetMap request covering `extent` at `resolution` units per pixel. The size
/// is ceil(extent / resolution) and the bbox grows right and down to that
/// exact grid, so its top-left corner stays at (min_x, max_y).
WmsRequest make_wms_request(const Extent2D& extent, const std::string& crs_id, double resolution,
                            const std::string& endpoint, const std::string& layer);

/// WMS 1.3.0 GetMap URL.
std::string wms_getmap_url(const WmsRequest& request);

enum class SatelliteSourceKind { Wms, Xyz };

struct SatelliteSource {
  SatelliteSourceKind kind = SatelliteSourceKind::Wms;
  /// WMS base URL, or an XYZ template containing {z}, {x} and {y}.
  std::string endpoint;
  std::string layer;
  std::string format = "image/png";
  AxisOrder axis_order = AxisOrder::Auto;
  int max_zoom = 21;
  int max_tiles = 256;
  RetryPolicy retry;
};

struct FetchOptions {
  /// Cache directory; empty disables caching.
  std::filesystem::path cache_dir;
  bool refresh = false;  // ignore existing cache entries
};

/// Satellite raster (Rep5) georeferenced to the request grid.
///  - cache hit: no network traffic; entries live at <cache>/<sha256>.png + .json
///  - non-2xx response: ErrorKind::Transport naming the status
///  - OGC service exception (XML body): ErrorKind::Service with the body verbatim
///  - XYZ sources accept EPSG:3857 and EPSG:4326 extents only
RasterImage fetch_satellite(const Extent2D& extent, const std::string& crs_id, double resolution,
                            const SatelliteSource& source, Transport& transport, const FetchOptions& options = {});

/// Cache key material for a request (hashed with SHA-256 for the file name).
std::string satellite_cache_key(const Extent2D& extent, const std::string& crs_id, double resolution,
                                const SatelliteSource& source);

struct AlignmentReport {
  std::optional<Extent2D> overlap;  // empty when the rasters are disjoint
  double offset_col = 0.0;          // sat origin relative to bev origin, in bev pixels
  double offset_row = 0.0;
  double scale = 1.0;               // sat cell size / bev cell size
};

/// Relates two georeferenced rasters purely through their geotransforms.
/// Throws ErrorKind::Alignment when either lacks a geotransform or the CRSs differ.
AlignmentReport align_check(const RasterImage& bev, const RasterImage& sat);

/// World extent covered by a georeferenced raster.
Extent2D raster_extent(const RasterImage& image);

}  // namespace pai
