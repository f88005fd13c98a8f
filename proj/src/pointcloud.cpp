#include "pai/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pai/error.hpp"

namespace pai {

bool selects(ClassSelector selector, ClassLabel label) {
  if (selector == ClassSelector::All) return true;
  const auto k = label.kind();
  return k == ClassLabel::Kind::Ground || k == ClassLabel::Kind::LowVegetation;
}

std::string to_string(ClassSelector selector) {
  return selector == ClassSelector::All ? "all" : "ground-only";
}

ClassSelector parse_class_selector(std::string_view text) {
  if (text == "all") return ClassSelector::All;
  if (text == "ground-only" || text == "ground" || text == "ground-and-low-veg") {
    return ClassSelector::GroundAndLowVeg;
  }
  throw Error(ErrorKind::Configuration, "unknown class selector '" + std::string(text) + "'");
}

PointCloud::PointCloud(PointColumns columns, std::vector<uint8_t> classification,
                       CloudMetadata meta)
    : meta_(std::move(meta)) {
  const std::size_t n = columns.x.size();
  if (columns.y.size() != n || columns.z.size() != n || columns.intensity.size() != n ||
      (!columns.rgb.empty() && columns.rgb.size() != n)) {
    throw Error(ErrorKind::InvalidArgument, "point columns have mismatched lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(columns.x[i]) || !std::isfinite(columns.y[i]) ||
        !std::isfinite(columns.z[i])) {
      throw Error(ErrorKind::InvalidArgument,
                  "point " + std::to_string(i) + " has non-finite coordinates");
    }
  }
  if (classification.empty()) classification.assign(n, ClassLabel::kUnclassifiedCode);
  if (classification.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "classification column length mismatch");
  }
  columns_ = std::make_shared<const PointColumns>(std::move(columns));
  classification_ = std::make_shared<const std::vector<uint8_t>>(std::move(classification));
}

namespace {
template <typename T>
std::span<const T> column_span(const std::shared_ptr<const PointColumns>& c,
                               std::vector<T> PointColumns::*member) {
  if (!c) return {};
  return std::span<const T>((*c).*member);
}
}  // namespace

std::span<const double> PointCloud::xs() const { return column_span(columns_, &PointColumns::x); }
std::span<const double> PointCloud::ys() const { return column_span(columns_, &PointColumns::y); }
std::span<const double> PointCloud::zs() const { return column_span(columns_, &PointColumns::z); }
std::span<const uint16_t> PointCloud::intensities() const {
  return column_span(columns_, &PointColumns::intensity);
}
std::span<const Rgb> PointCloud::colors() const { return column_span(columns_, &PointColumns::rgb); }
std::span<const uint8_t> PointCloud::classification_bytes() const {
  if (!classification_) return {};
  return *classification_;
}

LidarPoint PointCloud::point(std::size_t i) const {
  LidarPoint p;
  p.x = columns_->x[i];
  p.y = columns_->y[i];
  p.z = columns_->z[i];
  p.intensity = columns_->intensity[i];
  if (has_color()) p.color = columns_->rgb[i];
  p.class_label = label(i);
  return p;
}

PointCloud PointCloud::with_labels(std::span<const ClassLabel> labels) const {
  if (labels.size() != size()) {
    throw Error(ErrorKind::InvalidArgument, "label count does not match point count");
  }
  std::vector<uint8_t> bytes(size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<uint8_t>(((*classification_)[i] & 0xE0) | (labels[i].las_code() & 0x1F));
  }
  return with_classification_bytes(std::move(bytes));
}

PointCloud PointCloud::with_classification_bytes(std::vector<uint8_t> bytes) const {
  if (bytes.size() != size()) {
    throw Error(ErrorKind::InvalidArgument, "classification length does not match point count");
  }
  PointCloud out;
  out.columns_ = columns_;
  out.classification_ = std::make_shared<const std::vector<uint8_t>>(std::move(bytes));
  out.meta_ = meta_;
  return out;
}

PointCloud PointCloud::subset(std::span<const uint32_t> indices) const {
  PointColumns cols;
  std::vector<uint8_t> cls;
  cols.x.reserve(indices.size());
  cols.y.reserve(indices.size());
  cols.z.reserve(indices.size());
  cols.intensity.reserve(indices.size());
  cls.reserve(indices.size());
  for (uint32_t i : indices) {
    cols.x.push_back(columns_->x[i]);
    cols.y.push_back(columns_->y[i]);
    cols.z.push_back(columns_->z[i]);
    cols.intensity.push_back(columns_->intensity[i]);
    if (has_color()) cols.rgb.push_back(columns_->rgb[i]);
    cls.push_back((*classification_)[i]);
  }
  if (indices.empty()) {
    return PointCloud(std::move(cols), {}, meta_);
  }
  return PointCloud(std::move(cols), std::move(cls), meta_);
}

bool PointCloud::operator==(const PointCloud& other) const {
  if (meta_ != other.meta_ || size() != other.size() || has_color() != other.has_color()) {
    return false;
  }
  if (size() == 0) return true;
  return std::ranges::equal(xs(), other.xs()) && std::ranges::equal(ys(), other.ys()) &&
         std::ranges::equal(zs(), other.zs()) &&
         std::ranges::equal(intensities(), other.intensities()) &&
         std::ranges::equal(colors(), other.colors()) &&
         std::ranges::equal(classification_bytes(), other.classification_bytes());
}

PointCloudBuilder::PointCloudBuilder(CloudMetadata meta, bool with_color)
    : meta_(std::move(meta)), with_color_(with_color) {}

void PointCloudBuilder::reserve(std::size_t n) {
  columns_.x.reserve(n);
  columns_.y.reserve(n);
  columns_.z.reserve(n);
  columns_.intensity.reserve(n);
  if (with_color_) columns_.rgb.reserve(n);
  classification_.reserve(n);
}

double PointCloudBuilder::snap(double v, int axis) const {
  const auto& q = meta_.quantization;
  const double stored = std::round((v - q.offset[axis]) / q.scale[axis]);
  return q.offset[axis] + stored * q.scale[axis];
}

void PointCloudBuilder::add(double x, double y, double z, uint16_t intensity, ClassLabel label,
                            std::optional<Rgb> color) {
  columns_.x.push_back(snap(x, 0));
  columns_.y.push_back(snap(y, 1));
  columns_.z.push_back(snap(z, 2));
  columns_.intensity.push_back(intensity);
  if (with_color_) columns_.rgb.push_back(color.value_or(Rgb{}));
  classification_.push_back(label.las_code());
}

PointCloud PointCloudBuilder::build() && {
  return PointCloud(std::move(columns_), std::move(classification_), std::move(meta_));
}

std::vector<uint32_t> select_indices(const PointCloud& cloud, ClassSelector selector) {
  std::vector<uint32_t> out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (selects(selector, cloud.label(i))) out.push_back(static_cast<uint32_t>(i));
  }
  return out;
}

PointCloud filter_classes(const PointCloud& cloud, ClassSelector selector) {
  if (selector == ClassSelector::All) return cloud;
  const auto idx = select_indices(cloud, selector);
  return cloud.subset(idx);
}

std::optional<Extent2D> try_extent(const PointCloud& cloud) {
  if (cloud.empty()) return std::nullopt;
  const auto [minx, maxx] = std::ranges::minmax(cloud.xs());
  const auto [miny, maxy] = std::ranges::minmax(cloud.ys());
  return Extent2D{minx, miny, maxx, maxy};
}

Extent2D extent(const PointCloud& cloud) {
  auto e = try_extent(cloud);
  if (!e) throw Error(ErrorKind::EmptyInput, "extent of an empty point cloud");
  return *e;
}

}  // namespace pai
