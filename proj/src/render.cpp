#include "pai/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pai/error.hpp"

namespace pai {
namespace {

double percentile(std::vector<double>& values, double q) {
  // linear interpolation between closest ranks
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double a = values[lo];
  const double b = hi == lo ? a : *std::min_element(values.begin() + lo + 1, values.end());
  return a + (pos - lo) * (b - a);
}

long ceil_cells(double length, double cell) {
  const double n = length / cell;
  const double k = std::nearbyint(n);
  if (std::abs(n - k) <= 1e-9 * std::max(1.0, k)) return std::max(1L, static_cast<long>(k));
  return std::max(1L, static_cast<long>(std::ceil(n)));
}

void paint(RasterImage& image, int col, int row, const PointCloud& cloud, uint32_t idx,
           PixelAttribute attribute, const GrayMapping& gray) {
  if (attribute == PixelAttribute::Color) {
    image.set_rgb(col, row, cloud.colors()[idx]);
  } else {
    image.set_gray(col, row, gray(cloud.intensity(idx)));
  }
}

void require_color(const PointCloud& cloud, PixelAttribute attribute) {
  if (attribute == PixelAttribute::Color && !cloud.has_color()) {
    throw Error(ErrorKind::MissingAttribute, "color rendering requested but the cloud has no RGB");
  }
}

}  // namespace

uint8_t GrayMapping::operator()(uint16_t intensity) const {
  if (hi <= lo) return intensity >= lo ? 255 : 0;
  const double t = (intensity - lo) / (hi - lo);
  return static_cast<uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
}

GrayMapping intensity_mapping(const PointCloud& cloud, std::span<const uint32_t> indices) {
  if (indices.empty()) return {};
  std::vector<double> values;
  values.reserve(indices.size());
  for (uint32_t i : indices) values.push_back(cloud.intensity(i));
  GrayMapping m;
  m.lo = percentile(values, 0.02);
  m.hi = percentile(values, 0.98);
  return m;
}

std::pair<int, int> bev_dimensions(const Extent2D& box, double cell_size) {
  const long cols = ceil_cells(box.width(), cell_size);
  const long rows = ceil_cells(box.height(), cell_size);
  if (cols > std::numeric_limits<int>::max() / std::max(1L, rows)) {
    throw Error(ErrorKind::InvalidArgument, "BEV raster too large");
  }
  return {static_cast<int>(cols), static_cast<int>(rows)};
}

RenderResult render_bev(const PointCloud& cloud, ClassSelector selector, PixelAttribute attribute,
                        double cell_size) {
  if (!(cell_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "BEV cell size must be positive");
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "render_bev on an empty cloud");
  require_color(cloud, attribute);
  const Extent2D box = extent(cloud);
  const auto [cols, rows] = bev_dimensions(box, cell_size);
  const Geotransform geo{box.min_x, box.max_y, cell_size};
  const auto selected = select_indices(cloud, selector);
  const GrayMapping gray = intensity_mapping(cloud, selected);

  CorrespondenceMap cmap(cols, rows);
  std::vector<double> best(static_cast<std::size_t>(cols) * rows,
                           -std::numeric_limits<double>::infinity());
  const auto zs = cloud.zs();
  for (uint32_t i : selected) {
    auto [c, r] = geo.pixel_of(cloud.x(i), cloud.y(i));
    c = std::clamp<long>(c, 0, cols - 1);  // points on the max edge belong to the last cell
    r = std::clamp<long>(r, 0, rows - 1);
    const std::size_t k = static_cast<std::size_t>(r) * cols + c;
    if (zs[i] > best[k]) {  // strict: equal heights keep the lower index
      best[k] = zs[i];
      cmap.set(static_cast<int>(c), static_cast<int>(r), i, static_cast<float>(zs[i]));
    }
  }

  const ViewKind view = ViewKind::BEV;
  RenderResult out{RasterImage(cols, rows, attribute == PixelAttribute::Color ? 3 : 1,
                               representation_for(view, selector, attribute)),
                   std::move(cmap)};
  out.image.geo = geo;
  out.image.crs_id = cloud.metadata().crs_id;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (auto hit = out.correspondence.at(c, r)) {
        paint(out.image, c, r, cloud, static_cast<uint32_t>(hit->point_index), attribute, gray);
      }
    }
  }
  return out;
}

RenderResult render_street_view(const PointCloud& cloud, ClassSelector selector,
                                PixelAttribute attribute, const CameraIntrinsics& intr,
                                const CameraPose& pose, int point_size_px) {
  if (point_size_px < 1) throw Error(ErrorKind::InvalidArgument, "point size must be >= 1");
  intr.validate();
  pose.validate();
  require_color(cloud, attribute);
  const int w = intr.width, h = intr.height;
  const auto selected = select_indices(cloud, selector);
  const GrayMapping gray = intensity_mapping(cloud, selected);

  CorrespondenceMap cmap(w, h);
  std::vector<float> depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity());
  std::vector<uint32_t> winner(static_cast<std::size_t>(w) * h, CorrespondenceMap::kNoPoint);
  const int before = point_size_px / 2;  // square spans [c - before, c - before + size)
  const Eigen::Matrix3d rot = pose.rotation;
  const double f = intr.focal_px(), cx = intr.cx(), cy = intr.cy();
  const auto xs = cloud.xs(), ys = cloud.ys(), zs = cloud.zs();

  for (uint32_t i : selected) {
    const Eigen::Vector3d cam = rot * (Eigen::Vector3d(xs[i], ys[i], zs[i]) - pose.position);
    const double s = cam.z();
    if (!(s > 0.0)) continue;
    const double u = f * cam.x() / s + cx;
    const double v = f * cam.y() / s + cy;
    const double cu = std::floor(u + 0.5), cv = std::floor(v + 0.5);
    // skip splats entirely outside the image (also guards the integer casts)
    if (cu + (point_size_px - before) <= 0 || cu - before >= w || cv + (point_size_px - before) <= 0 ||
        cv - before >= h) {
      continue;
    }
    const int c0 = std::max(0, static_cast<int>(cu) - before);
    const int r0 = std::max(0, static_cast<int>(cv) - before);
    const int c1 = std::min(w, static_cast<int>(cu) - before + point_size_px);
    const int r1 = std::min(h, static_cast<int>(cv) - before + point_size_px);
    const float d = static_cast<float>(s);
    for (int r = r0; r < r1; ++r) {
      std::size_t k = static_cast<std::size_t>(r) * w + c0;
      for (int c = c0; c < c1; ++c, ++k) {
        if (d < depth[k] || (d == depth[k] && i < winner[k])) {
          depth[k] = d;
          winner[k] = i;
        }
      }
    }
  }

  RenderResult out{RasterImage(w, h, attribute == PixelAttribute::Color ? 3 : 1,
                               representation_for(ViewKind::StreetView, selector, attribute)),
                   std::move(cmap)};
  out.image.crs_id = cloud.metadata().crs_id;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t k = static_cast<std::size_t>(r) * w + c;
      if (winner[k] == CorrespondenceMap::kNoPoint) continue;
      out.correspondence.set(c, r, winner[k], depth[k]);
      paint(out.image, c, r, cloud, winner[k], attribute, gray);
    }
  }
  return out;
}

std::optional<LidarPoint> back_project(long col, long row, const CorrespondenceMap& cmap,
                                       const PointCloud& cloud) {
  if (!cmap.in_bounds(col, row)) {
    throw Error(ErrorKind::Bounds, "pixel (" + std::to_string(col) + ", " + std::to_string(row) +
                                       ") outside " + std::to_string(cmap.width()) + "x" +
                                       std::to_string(cmap.height()) + " image");
  }
  const auto hit = cmap.at(static_cast<int>(col), static_cast<int>(row));
  if (!hit) return std::nullopt;
  if (hit->point_index >= cloud.size()) {
    throw Error(ErrorKind::ReferentialIntegrity, "correspondence references a point outside the cloud");
  }
  return cloud.point(hit->point_index);
}

}  // namespace pai
