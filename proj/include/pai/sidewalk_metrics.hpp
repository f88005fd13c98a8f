#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pai/feature_class.hpp"
#include "pai/mask_reprojection.hpp"
#include "pai/pointcloud.hpp"
#include "pai/polygon.hpp"

namespace pai {

/// Lengths in metres; the cloud's unit is converted on the way in and out.
struct MetricsOptions {
  double cell_m = 0.25;              // occupancy grid for the skeleton
  double min_arc_m = 2.0;            // shorter skeleton arcs are dropped
  double station_spacing_m = 5.0;
  double probe_halfwidth_m = 2.5;    // perpendicular reach of a station
  double slope_window_m = 2.0;       // along-track half window of the running slope fit
  double lower_percentile = 2.0;
  double upper_percentile = 98.0;
  std::size_t min_points = 10;       // fewer points -> null measurements
};

struct Station {
  double s_m = 0.0;                  // arc length along the centerline
  Point2 position;                   // world coordinates
  std::optional<double> width_m;
  std::optional<double> running_slope_pct;  // magnitude
  std::optional<double> cross_slope_pct;    // magnitude
  std::size_t point_count = 0;
};

struct SidewalkSegment {
  std::vector<Point2> centerline;    // world coordinates, ordered
  double length_m = 0.0;
  std::vector<Station> stations;
};

/// Points of one class as world xyz.
std::vector<Eigen::Vector3d> class_points(const PointCloud& cloud, const LabeledCloud& labeled, FeatureClass c);

/// Occupancy grid (one closing pass), Zhang-Suen thinning, reduction to an
/// 8-connected minimal skeleton, spur pruning, arcs traced into polylines and
/// Douglas-Peucker simplified by a quarter cell. The grid is laid out in the
/// points' principal-axis frame, so a rigid motion of the input moves the
/// centerlines with it. Empty input gives an empty list.
std::vector<std::vector<Point2>> extract_centerline(const std::vector<Eigen::Vector3d>& points,
                                                    LinearUnit unit, const MetricsOptions& options = {});

/// Stations at arc lengths (k + 1/2) * spacing. At each station with tangent t
/// and normal n:
///  - width: (P_hi - P_lo) / ((hi - lo) / 100) of the normal offsets of points
///    within +/- spacing/2 along t and +/- probe_halfwidth along n (the
///    percentile extent rescaled to the full extent of a uniform strip)
///  - cross slope: 100 |c| of the plane z = a + b along + c across fitted to those points
///  - running slope: 100 |b| of the same plane fitted within +/- slope_window along t
/// Throws ErrorKind::InvalidArgument when the centerline is shorter than the spacing.
SidewalkSegment measure_stations(const std::vector<Eigen::Vector3d>& points, const std::vector<Point2>& centerline,
                                 LinearUnit unit, const MetricsOptions& options = {});

/// Centerlines of one class plus stations on each one long enough for a station.
std::vector<SidewalkSegment> sidewalk_metrics(const PointCloud& cloud, const LabeledCloud& labeled, FeatureClass c,
                                              const MetricsOptions& options = {});

/// segment,s_m,width_m,running_slope_pct,cross_slope_pct; null measurements are empty fields.
std::string stations_csv(const std::vector<SidewalkSegment>& segments);
/// Same columns without the segment column, for one segment.
std::string segment_csv(const SidewalkSegment& segment);
/// Centerlines as LineStrings and stations as Points with their measurements.
std::string metrics_geojson(const std::vector<SidewalkSegment>& segments, const std::string& crs_id);

/// Linear-interpolation percentile (p in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double p);

}  // namespace pai
