#include "pai/ground_classify.hpp"

#include <cmath>
#include <limits>

#include "pai/error.hpp"
#include "pai/grid.hpp"

namespace pai {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CellIndex {
  Extent2D box;
  double cell = 1.0;
  int rows = 0;
  int cols = 0;

  CellIndex(const Extent2D& e, double cell_size) : box(e), cell(cell_size) {
    cols = static_cast<int>(std::floor(e.width() / cell)) + 1;
    rows = static_cast<int>(std::floor(e.height() / cell)) + 1;
  }
  int col(double x) const { return std::min(cols - 1, static_cast<int>((x - box.min_x) / cell)); }
  int row(double y) const { return std::min(rows - 1, static_cast<int>((y - box.min_y) / cell)); }
  // Fractional coordinates with integers at cell centers.
  double fcol(double x) const { return (x - box.min_x) / cell - 0.5; }
  double frow(double y) const { return (y - box.min_y) / cell - 0.5; }
};

double local_slope(const Grid<double>& s, int r, int c, double cell) {
  const int c0 = std::max(0, c - 1), c1 = std::min(s.cols() - 1, c + 1);
  const int r0 = std::max(0, r - 1), r1 = std::min(s.rows() - 1, r + 1);
  const double gx = c1 > c0 ? (s(r, c1) - s(r, c0)) / ((c1 - c0) * cell) : 0.0;
  const double gy = r1 > r0 ? (s(r1, c) - s(r0, c)) / ((r1 - r0) * cell) : 0.0;
  return std::hypot(gx, gy);
}

}  // namespace

SmrfParams SmrfParams::defaults(LinearUnit unit) {
  SmrfParams p;
  p.cell_size = from_meters(1.0, unit);
  p.max_window = from_meters(18.0, unit);
  p.elevation_threshold = from_meters(0.5, unit);
  return p;
}

void SmrfParams::validate() const {
  if (!(cell_size > 0 && max_window > 0 && slope_threshold > 0 && elevation_threshold > 0 &&
        elevation_scaling > 0)) {
    throw Error(ErrorKind::InvalidArgument, "SMRF parameters must all be positive");
  }
  if (max_window < cell_size) {
    throw Error(ErrorKind::InvalidArgument, "SMRF max_window must be at least cell_size");
  }
}

void VegetationTiers::validate() const {
  if (!(low_max > 0 && low_max < medium_max)) {
    throw Error(ErrorKind::InvalidArgument, "vegetation tiers need 0 < low_max < medium_max");
  }
}

PointCloud classify_ground(const PointCloud& cloud, const SmrfParams& params) {
  params.validate();
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "classify_ground on an empty cloud");
  const Extent2D box = extent(cloud);
  if (box.width() == 0.0 && box.height() == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "all points coincide in x,y");
  }
  const CellIndex idx(box, params.cell_size);
  const auto xs = cloud.xs();
  const auto ys = cloud.ys();
  const auto zs = cloud.zs();

  // (1) minimum surface
  Grid<double> zmin(idx.rows, idx.cols, kNaN);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double& cell = zmin(idx.row(ys[i]), idx.col(xs[i]));
    if (!(cell <= zs[i])) cell = zs[i];
  }
  // (2) fill empty cells
  Grid<double> last = zmin;
  inpaint_nearest(last);

  // (3) progressive opening; flag cells whose drop exceeds the window threshold
  Grid<unsigned char> object(idx.rows, idx.cols, 0);
  const int max_radius = static_cast<int>(std::ceil(params.max_window / params.cell_size));
  for (int radius = 1; radius <= max_radius; ++radius) {
    const double threshold =
        params.slope_threshold * radius * params.cell_size + params.elevation_threshold;
    Grid<double> opened = open_disk(last, radius);
    for (std::size_t k = 0; k < opened.data().size(); ++k) {
      if (last.data()[k] - opened.data()[k] > threshold) object.data()[k] = 1;
    }
    last = std::move(opened);
  }

  // provisional ground surface from unflagged minimum cells
  Grid<double> surface = zmin;
  for (std::size_t k = 0; k < surface.data().size(); ++k) {
    if (object.data()[k]) surface.data()[k] = kNaN;
  }
  if (!inpaint_nearest(surface)) surface = last;  // every cell flagged: fall back to the opened surface

  // (4) label by height above the provisional surface
  std::vector<ClassLabel> labels(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double ground_z = sample_bilinear(surface, idx.fcol(xs[i]), idx.frow(ys[i]));
    const double slope = local_slope(surface, idx.row(ys[i]), idx.col(xs[i]), params.cell_size);
    const double tolerance = params.elevation_threshold + params.elevation_scaling * slope;
    labels[i] = (zs[i] - ground_z <= tolerance) ? ClassLabel::ground() : ClassLabel::unclassified();
  }
  return cloud.with_labels(labels);
}

PointCloud classify_vegetation(const PointCloud& cloud, const VegetationTiers& tiers,
                               double surface_cell_m) {
  tiers.validate();
  const LinearUnit unit = cloud.metadata().linear_unit;
  const auto xs = cloud.xs();
  const auto ys = cloud.ys();
  const auto zs = cloud.zs();
  std::vector<uint32_t> ground;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.label(i).kind() == ClassLabel::Kind::Ground) ground.push_back(static_cast<uint32_t>(i));
  }
  if (ground.empty()) throw Error(ErrorKind::MissingGround, "cloud has no Ground points");

  const CellIndex idx(extent(cloud), from_meters(surface_cell_m, unit));
  Grid<double> sum(idx.rows, idx.cols, 0.0);
  Grid<double> count(idx.rows, idx.cols, 0.0);
  for (uint32_t i : ground) {
    const int r = idx.row(ys[i]), c = idx.col(xs[i]);
    sum(r, c) += zs[i];
    count(r, c) += 1.0;
  }
  Grid<double> surface(idx.rows, idx.cols, kNaN);
  for (std::size_t k = 0; k < surface.data().size(); ++k) {
    if (count.data()[k] > 0) surface.data()[k] = sum.data()[k] / count.data()[k];
  }
  inpaint_nearest(surface);

  std::vector<ClassLabel> labels(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.label(i).kind() == ClassLabel::Kind::Ground) {
      labels[i] = ClassLabel::ground();
      continue;
    }
    const double h =
        to_meters(zs[i] - sample_bilinear(surface, idx.fcol(xs[i]), idx.frow(ys[i])), unit);
    if (h <= tiers.low_max) {
      labels[i] = ClassLabel::low_vegetation();
    } else if (h <= tiers.medium_max) {
      labels[i] = ClassLabel::medium_vegetation();
    } else {
      labels[i] = ClassLabel::high_vegetation();
    }
  }
  return cloud.with_labels(labels);
}

}  // namespace pai
