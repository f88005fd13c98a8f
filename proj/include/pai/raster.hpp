#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pai/pointcloud.hpp"

namespace pai {

enum class ViewKind { BEV, StreetView, Satellite };
enum class PixelAttribute { Intensity, Color };

enum class RepresentationId : int { Rep1 = 1, Rep2, Rep3, Rep4, Rep5, Rep6, Rep7, Rep8, Rep9 };

struct RepresentationSpec {
  RepresentationId id;
  ViewKind view;
  std::optional<ClassSelector> selector;   // empty for satellite imagery
  std::optional<PixelAttribute> attribute;
};

/// The nine image representations: BEV x {ground, all} x {intensity, color},
/// satellite, street view x {ground, all} x {intensity, color}.
const RepresentationSpec& describe(RepresentationId id);
RepresentationId representation_for(ViewKind view, ClassSelector selector, PixelAttribute attribute);
std::string to_string(RepresentationId id);  // "rep1" .. "rep9"
RepresentationId parse_representation(std::string_view text);
std::string to_string(PixelAttribute a);
PixelAttribute parse_pixel_attribute(std::string_view text);

/// Square-cell north-up affine map; origin is the top-left corner of pixel (0, 0).
struct Geotransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 1.0;

  /// World coordinates of the top-left corner of (col, row).
  std::pair<double, double> world(double col, double row) const {
    return {origin_x + col * cell_size, origin_y - row * cell_size};
  }
  std::pair<double, double> world_center(int col, int row) const { return world(col + 0.5, row + 0.5); }
  /// Cell containing (x, y); values within 1e-9 cell of a boundary snap to it
  /// so world() -> pixel_of() round trips exactly.
  std::pair<long, long> pixel_of(double x, double y) const;

  bool operator==(const Geotransform&) const = default;
};

/// 8-bit gray or RGB raster with a per-pixel validity mask (invalid = no-data).
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, RepresentationId rep);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  RepresentationId representation() const { return rep_; }
  void set_representation(RepresentationId rep) { rep_ = rep; }

  bool in_bounds(long col, long row) const {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }
  bool valid(int col, int row) const { return valid_[index(col, row)] != 0; }
  uint8_t gray(int col, int row) const { return pixels_[index(col, row) * channels_]; }
  Rgb rgb(int col, int row) const;
  uint8_t channel(int col, int row, int ch) const { return pixels_[index(col, row) * channels_ + ch]; }

  void set_gray(int col, int row, uint8_t v);
  void set_rgb(int col, int row, Rgb c);
  void set_invalid(int col, int row);

  /// Luma (BT.601) copy for RGB images, identity for gray.
  RasterImage to_gray() const;

  std::vector<uint8_t>& pixels() { return pixels_; }
  const std::vector<uint8_t>& pixels() const { return pixels_; }
  std::vector<uint8_t>& validity() { return valid_; }
  const std::vector<uint8_t>& validity() const { return valid_; }

  std::optional<Geotransform> geo;
  std::string crs_id;

  bool operator==(const RasterImage&) const = default;

 private:
  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * width_ + col; }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  RepresentationId rep_ = RepresentationId::Rep1;
  std::vector<uint8_t> pixels_;
  std::vector<uint8_t> valid_;
};

struct Correspondence {
  uint64_t point_index = 0;
  float depth = 0.0f;
  bool operator==(const Correspondence&) const = default;
};

/// Per-pixel link from a rendered pixel back to the source cloud. For street
/// views `depth` is the camera-frame depth s; for BEV it is the winning
/// point's elevation.
class CorrespondenceMap {
 public:
  static constexpr uint32_t kNoPoint = UINT32_MAX;

  CorrespondenceMap() = default;
  CorrespondenceMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(long col, long row) const {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }
  std::optional<Correspondence> at(int col, int row) const;
  void set(int col, int row, uint32_t point_index, float depth);
  std::size_t populated() const;

  const std::vector<uint32_t>& indices() const { return index_; }
  const std::vector<float>& depths() const { return depth_; }

  bool operator==(const CorrespondenceMap& other) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint32_t> index_;
  std::vector<float> depth_;
};

}  // namespace pai
