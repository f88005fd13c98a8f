#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pai/units.hpp"

namespace pai {

/// LAS classification code interpreted through the tiers this pipeline uses.
/// Codes 1..5 map to named labels; every other code is carried as Other.
class ClassLabel {
 public:
  enum class Kind { Unclassified, Ground, LowVegetation, MediumVegetation, HighVegetation, Other };

  static constexpr uint8_t kUnclassifiedCode = 1;
  static constexpr uint8_t kGroundCode = 2;
  static constexpr uint8_t kLowVegetationCode = 3;
  static constexpr uint8_t kMediumVegetationCode = 4;
  static constexpr uint8_t kHighVegetationCode = 5;

  constexpr ClassLabel() = default;

  static constexpr ClassLabel from_las(uint8_t code) { return ClassLabel(code); }
  static constexpr ClassLabel unclassified() { return ClassLabel(kUnclassifiedCode); }
  static constexpr ClassLabel ground() { return ClassLabel(kGroundCode); }
  static constexpr ClassLabel low_vegetation() { return ClassLabel(kLowVegetationCode); }
  static constexpr ClassLabel medium_vegetation() { return ClassLabel(kMediumVegetationCode); }
  static constexpr ClassLabel high_vegetation() { return ClassLabel(kHighVegetationCode); }

  constexpr uint8_t las_code() const { return code_; }

  constexpr Kind kind() const {
    switch (code_) {
      case kUnclassifiedCode: return Kind::Unclassified;
      case kGroundCode: return Kind::Ground;
      case kLowVegetationCode: return Kind::LowVegetation;
      case kMediumVegetationCode: return Kind::MediumVegetation;
      case kHighVegetationCode: return Kind::HighVegetation;
      default: return Kind::Other;
    }
  }

  constexpr bool operator==(const ClassLabel&) const = default;

 private:
  constexpr explicit ClassLabel(uint8_t code) : code_(code) {}
  uint8_t code_ = kUnclassifiedCode;
};

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;
  constexpr bool operator==(const Rgb&) const = default;
};

/// Value view of one point; the cloud itself stores columns.
struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  uint16_t intensity = 0;
  std::optional<Rgb> color;
  ClassLabel class_label;

  bool operator==(const LidarPoint&) const = default;
};

enum class ClassSelector { All, GroundAndLowVeg };

bool selects(ClassSelector selector, ClassLabel label);

/// LAS integer quantization: world = offset + scale * stored.
struct Quantization {
  std::array<double, 3> scale{0.001, 0.001, 0.001};
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  bool operator==(const Quantization&) const = default;
};

struct CloudMetadata {
  std::string crs_id;
  LinearUnit linear_unit = LinearUnit::Meters;
  std::string source_path;
  Quantization quantization;
  bool operator==(const CloudMetadata&) const = default;
};

struct Extent2D {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  bool operator==(const Extent2D&) const = default;
};

/// Column storage shared between a cloud and the relabelled clouds derived from it.
struct PointColumns {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  std::vector<uint16_t> intensity;
  std::vector<Rgb> rgb;  // empty when the cloud carries no color

  std::size_t size() const { return x.size(); }
};

/// Immutable point cloud. Geometry columns are shared; relabelling produces a
/// new cloud that references the same geometry.
class PointCloud {
 public:
  PointCloud() = default;

  /// `classification` holds raw LAS classification bytes (class code in the low
  /// five bits, flag bits above); empty means all Unclassified.
  PointCloud(PointColumns columns, std::vector<uint8_t> classification, CloudMetadata meta);

  std::size_t size() const { return columns_ ? columns_->size() : 0; }
  bool empty() const { return size() == 0; }
  bool has_color() const { return columns_ && !columns_->rgb.empty(); }

  std::span<const double> xs() const;
  std::span<const double> ys() const;
  std::span<const double> zs() const;
  std::span<const uint16_t> intensities() const;
  std::span<const Rgb> colors() const;
  std::span<const uint8_t> classification_bytes() const;

  double x(std::size_t i) const { return columns_->x[i]; }
  double y(std::size_t i) const { return columns_->y[i]; }
  double z(std::size_t i) const { return columns_->z[i]; }
  uint16_t intensity(std::size_t i) const { return columns_->intensity[i]; }
  ClassLabel label(std::size_t i) const {
    return ClassLabel::from_las(static_cast<uint8_t>((*classification_)[i] & 0x1F));
  }

  LidarPoint point(std::size_t i) const;
  const CloudMetadata& metadata() const { return meta_; }

  /// Same geometry, new labels; flag bits of the classification byte are kept.
  PointCloud with_labels(std::span<const ClassLabel> labels) const;
  /// Same geometry, raw classification bytes replaced verbatim.
  PointCloud with_classification_bytes(std::vector<uint8_t> bytes) const;
  PointCloud subset(std::span<const uint32_t> indices) const;

  bool operator==(const PointCloud& other) const;

 private:
  std::shared_ptr<const PointColumns> columns_;
  std::shared_ptr<const std::vector<uint8_t>> classification_;
  CloudMetadata meta_;
};

/// Builds a cloud point by point; coordinates are snapped to the LAS grid of
/// `meta.quantization` so that LAS round trips are exact.
class PointCloudBuilder {
 public:
  explicit PointCloudBuilder(CloudMetadata meta, bool with_color = false);

  void reserve(std::size_t n);
  void add(double x, double y, double z, uint16_t intensity, ClassLabel label,
           std::optional<Rgb> color = std::nullopt);
  std::size_t size() const { return columns_.size(); }
  PointCloud build() &&;

 private:
  double snap(double v, int axis) const;

  CloudMetadata meta_;
  bool with_color_;
  PointColumns columns_;
  std::vector<uint8_t> classification_;
};

std::vector<uint32_t> select_indices(const PointCloud& cloud, ClassSelector selector);
PointCloud filter_classes(const PointCloud& cloud, ClassSelector selector);

/// Tight XY bounding box; throws ErrorKind::EmptyInput on an empty cloud.
Extent2D extent(const PointCloud& cloud);
std::optional<Extent2D> try_extent(const PointCloud& cloud);

std::string to_string(ClassSelector selector);
ClassSelector parse_class_selector(std::string_view text);

}  // namespace pai
