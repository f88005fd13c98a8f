#pragma once

#include <cstdint>
#include <vector>

#include "pai/pointcloud.hpp"

namespace pai {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
  auto operator<=>(const Point2&) const = default;
};

/// Closed ring; the closing vertex (first == last) is implied, not stored.
using Ring = std::vector<Point2>;

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
  bool operator==(const Polygon&) const = default;
};

/// Shoelace area in the ring's own axes (positive = counterclockwise with y up).
double signed_area(const Ring& ring);
/// Area as displayed on screen, where pixel rows grow downward: -signed_area.
inline double screen_signed_area(const Ring& ring) { return -signed_area(ring); }
/// |outer| - sum |holes|.
double polygon_area(const Polygon& poly);

/// Orients the outer ring counterclockwise and holes clockwise. With
/// `y_down` the orientation is judged as displayed (image pixel coordinates).
void normalize_orientation(Polygon& poly, bool y_down);

/// Even-odd test with half-open edges: a point on a left edge is inside, on a
/// right edge outside; likewise bottom inside, top outside, where "bottom"
/// means the smaller y (or, with `y_down`, the larger row as displayed).
bool ring_contains(const Ring& ring, double x, double y, bool y_down);
bool polygon_contains(const Polygon& poly, double x, double y, bool y_down);

Extent2D bounding_box(const Ring& ring);

/// Drops consecutive duplicates and collinear vertices.
Ring remove_collinear(const Ring& ring);
/// Douglas-Peucker on a closed ring; keeps at least 3 vertices.
Ring simplify(const Ring& ring, double epsilon);
/// True when no two non-adjacent edges intersect (O(n^2)).
bool is_simple(const Ring& ring);

/// Rotation-invariant form: the lexicographically smallest vertex first,
/// orientation unchanged. Two rings describing the same closed curve with the
/// same orientation canonicalize identically.
Ring canonical_ring(const Ring& ring);
Polygon canonical_polygon(const Polygon& poly);

/// Binary image, row-major, 1 = inside.
struct Bitmask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;

  Bitmask() = default;
  Bitmask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
  bool at(int col, int row) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
  void set(int col, int row, bool v = true) { bits[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0; }
  std::size_t count() const;
};

/// Outlines every 4-connected component along pixel edges. Pixel centres are
/// at integer coordinates, so vertices sit on half-integers; each polygon's
/// area equals its pixel count and its even-odd interior contains exactly the
/// component's pixel centres. Components come out in raster order of their
/// first pixel; rings are oriented as normalize_orientation(y_down = true).
std::vector<Polygon> trace_components(const Bitmask& mask);

/// Rasterizes by pixel-centre containment (even-odd, half-open).
Bitmask rasterize(const Polygon& poly, int width, int height);

}  // namespace pai
