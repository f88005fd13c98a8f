#include "pai/raster.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>

#include "pai/error.hpp"

namespace pai {
namespace {

using Sel = ClassSelector;
using Attr = PixelAttribute;

const std::array<RepresentationSpec, 9> kRepresentations = {{
    {RepresentationId::Rep1, ViewKind::BEV, Sel::GroundAndLowVeg, Attr::Intensity},
    {RepresentationId::Rep2, ViewKind::BEV, Sel::All, Attr::Intensity},
    {RepresentationId::Rep3, ViewKind::BEV, Sel::GroundAndLowVeg, Attr::Color},
    {RepresentationId::Rep4, ViewKind::BEV, Sel::All, Attr::Color},
    {RepresentationId::Rep5, ViewKind::Satellite, std::nullopt, std::nullopt},
    {RepresentationId::Rep6, ViewKind::StreetView, Sel::GroundAndLowVeg, Attr::Intensity},
    {RepresentationId::Rep7, ViewKind::StreetView, Sel::GroundAndLowVeg, Attr::Color},
    {RepresentationId::Rep8, ViewKind::StreetView, Sel::All, Attr::Intensity},
    {RepresentationId::Rep9, ViewKind::StreetView, Sel::All, Attr::Color},
}};

long snapped_floor(double v) {
  const double k = std::nearbyint(v);
  if (std::abs(v - k) <= 1e-9 * std::max(1.0, std::abs(k))) return static_cast<long>(k);
  return static_cast<long>(std::floor(v));
}

}  // namespace

const RepresentationSpec& describe(RepresentationId id) {
  const int i = static_cast<int>(id);
  if (i < 1 || i > 9) throw Error(ErrorKind::InvalidArgument, "unknown representation id");
  return kRepresentations[i - 1];
}

RepresentationId representation_for(ViewKind view, ClassSelector selector, PixelAttribute attribute) {
  for (const auto& r : kRepresentations) {
    if (r.view == view && r.selector == selector && r.attribute == attribute) return r.id;
  }
  throw Error(ErrorKind::InvalidArgument, "no representation for this view/selector/attribute");
}

std::string to_string(RepresentationId id) { return "rep" + std::to_string(static_cast<int>(id)); }

RepresentationId parse_representation(std::string_view text) {
  std::string t(text);
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t.rfind("rep", 0) == 0) t = t.substr(3);
  if (!t.empty() && t[0] == '.') t = t.substr(1);
  if (t.size() == 1 && t[0] >= '1' && t[0] <= '9') return static_cast<RepresentationId>(t[0] - '0');
  throw Error(ErrorKind::Parse, "unknown representation '" + std::string(text) + "'");
}

std::string to_string(PixelAttribute a) { return a == PixelAttribute::Color ? "color" : "intensity"; }

PixelAttribute parse_pixel_attribute(std::string_view text) {
  if (text == "intensity") return PixelAttribute::Intensity;
  if (text == "color" || text == "rgb") return PixelAttribute::Color;
  throw Error(ErrorKind::Configuration, "unknown pixel attribute '" + std::string(text) + "'");
}

std::pair<long, long> Geotransform::pixel_of(double x, double y) const {
  return {snapped_floor((x - origin_x) / cell_size), snapped_floor((origin_y - y) / cell_size)};
}

RasterImage::RasterImage(int width, int height, int channels, RepresentationId rep)
    : width_(width), height_(height), channels_(channels), rep_(rep) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw Error(ErrorKind::InvalidArgument, "invalid raster dimensions or channel count");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height * channels, 0);
  valid_.assign(static_cast<std::size_t>(width) * height, 0);
}

Rgb RasterImage::rgb(int col, int row) const {
  const std::size_t i = index(col, row) * channels_;
  if (channels_ == 1) return Rgb{pixels_[i], pixels_[i], pixels_[i]};
  return Rgb{pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RasterImage::set_gray(int col, int row, uint8_t v) {
  const std::size_t i = index(col, row);
  for (int c = 0; c < channels_; ++c) pixels_[i * channels_ + c] = v;
  valid_[i] = 1;
}

void RasterImage::set_rgb(int col, int row, Rgb c) {
  const std::size_t i = index(col, row);
  if (channels_ == 1) {
    pixels_[i] = static_cast<uint8_t>(std::lround(0.299 * c.r + 0.587 * c.g + 0.114 * c.b));
  } else {
    pixels_[i * 3] = c.r;
    pixels_[i * 3 + 1] = c.g;
    pixels_[i * 3 + 2] = c.b;
  }
  valid_[i] = 1;
}

void RasterImage::set_invalid(int col, int row) {
  const std::size_t i = index(col, row);
  for (int c = 0; c < channels_; ++c) pixels_[i * channels_ + c] = 0;
  valid_[i] = 0;
}

RasterImage RasterImage::to_gray() const {
  if (channels_ == 1) return *this;
  RasterImage out(width_, height_, 1, rep_);
  out.geo = geo;
  out.crs_id = crs_id;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (valid(c, r)) out.set_rgb(c, r, rgb(c, r));
    }
  }
  return out;
}

CorrespondenceMap::CorrespondenceMap(int width, int height)
    : width_(width),
      height_(height),
      index_(static_cast<std::size_t>(width) * height, kNoPoint),
      depth_(static_cast<std::size_t>(width) * height, std::numeric_limits<float>::quiet_NaN()) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::InvalidArgument, "invalid map dimensions");
}

std::optional<Correspondence> CorrespondenceMap::at(int col, int row) const {
  const std::size_t i = static_cast<std::size_t>(row) * width_ + col;
  if (index_[i] == kNoPoint) return std::nullopt;
  return Correspondence{index_[i], depth_[i]};
}

void CorrespondenceMap::set(int col, int row, uint32_t point_index, float depth) {
  const std::size_t i = static_cast<std::size_t>(row) * width_ + col;
  index_[i] = point_index;
  depth_[i] = depth;
}

std::size_t CorrespondenceMap::populated() const {
  return static_cast<std::size_t>(std::count_if(index_.begin(), index_.end(),
                                                [](uint32_t v) { return v != kNoPoint; }));
}

bool CorrespondenceMap::operator==(const CorrespondenceMap& other) const {
  if (width_ != other.width_ || height_ != other.height_ || index_ != other.index_) return false;
  for (std::size_t i = 0; i < index_.size(); ++i) {
    if (index_[i] != kNoPoint && depth_[i] != other.depth_[i]) return false;
  }
  return true;
}

}  // namespace pai
