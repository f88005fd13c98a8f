#include "pai/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace pai {
namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

void douglas_peucker(const Ring& pts, std::size_t first, std::size_t last, double eps, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double best = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) best = d, index = i;
  }
  if (best > eps) {
    keep[index] = true;
    douglas_peucker(pts, first, index, eps, keep);
    douglas_peucker(pts, index, last, eps, keep);
  }
}

// Row crossings of all ring edges at height y (already in the y-up frame),
// using the same half-open rule as ring_contains.
void collect_crossings(const Ring& ring, double y, bool y_down, std::vector<double>& xs) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double yi = y_down ? -ring[i].y : ring[i].y;
    const double yj = y_down ? -ring[j].y : ring[j].y;
    if ((yi > y) != (yj > y)) {
      xs.push_back(ring[i].x + (y - yi) * (ring[j].x - ring[i].x) / (yj - yi));
    }
  }
}

}  // namespace

double signed_area(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double sum = 0.0;
  // relative to the first vertex to keep precision for map coordinates
  const Point2 o = ring[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    sum += (ring[i].x - o.x) * (ring[i + 1].y - o.y) - (ring[i + 1].x - o.x) * (ring[i].y - o.y);
  }
  return sum / 2.0;
}

double polygon_area(const Polygon& poly) {
  double a = std::abs(signed_area(poly.outer));
  for (const auto& h : poly.holes) a -= std::abs(signed_area(h));
  return a;
}

void normalize_orientation(Polygon& poly, bool y_down) {
  auto oriented = [&](const Ring& r) { return y_down ? screen_signed_area(r) : signed_area(r); };
  if (oriented(poly.outer) < 0) std::reverse(poly.outer.begin(), poly.outer.end());
  for (auto& h : poly.holes) {
    if (oriented(h) > 0) std::reverse(h.begin(), h.end());
  }
}

bool ring_contains(const Ring& ring, double x, double y, bool y_down) {
  if (ring.size() < 3) return false;
  std::vector<double> xs;
  collect_crossings(ring, y_down ? -y : y, y_down, xs);
  std::size_t count = 0;
  for (double cx : xs) count += x < cx;
  return count % 2 == 1;
}

bool polygon_contains(const Polygon& poly, double x, double y, bool y_down) {
  bool inside = ring_contains(poly.outer, x, y, y_down);
  for (const auto& h : poly.holes) inside ^= ring_contains(h, x, y, y_down);
  return inside;
}

Extent2D bounding_box(const Ring& ring) {
  Extent2D box{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& p : ring) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

Ring remove_collinear(const Ring& ring) {
  Ring r;
  for (const auto& p : ring) {
    if (r.empty() || !(r.back() == p)) r.push_back(p);
  }
  while (r.size() > 1 && r.front() == r.back()) r.pop_back();
  bool changed = true;
  while (changed && r.size() > 3) {
    changed = false;
    Ring out;
    const std::size_t n = r.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& prev = out.empty() ? r[(i + n - 1) % n] : out.back();
      const Point2& next = r[(i + 1) % n];
      if (cross(prev, r[i], next) == 0.0) {
        changed = true;
        continue;
      }
      out.push_back(r[i]);
    }
    if (out.size() < 3) break;
    r = std::move(out);
  }
  return r;
}

Ring simplify(const Ring& ring, double epsilon) {
  if (ring.size() <= 3 || epsilon <= 0.0) return ring;
  // split the closed ring at vertex 0 and the vertex farthest from it
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i < ring.size(); ++i) {
    const double d = std::hypot(ring[i].x - ring[0].x, ring[i].y - ring[0].y);
    if (d > best) best = d, far = i;
  }
  Ring loop = ring;
  loop.push_back(ring[0]);
  std::vector<bool> keep(loop.size(), false);
  keep[0] = keep[far] = keep.back() = true;
  douglas_peucker(loop, 0, far, epsilon, keep);
  douglas_peucker(loop, far, loop.size() - 1, epsilon, keep);
  Ring out;
  for (std::size_t i = 0; i + 1 < loop.size(); ++i) {
    if (keep[i]) out.push_back(loop[i]);
  }
  if (out.size() < 3) return ring;
  return out;
}

bool is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 &a = ring[i], &b = ring[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point2 &c = ring[j], &d = ring[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // neighbours share one vertex; they must not fold back onto each other
        const Point2& shared = j == i + 1 ? b : a;
        const Point2& p = j == i + 1 ? a : b;
        const Point2& q = j == i + 1 ? d : c;
        if (cross(shared, p, q) == 0.0 && (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y) > 0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

Ring canonical_ring(const Ring& ring) {
  if (ring.empty()) return ring;
  const auto it = std::min_element(ring.begin(), ring.end());
  Ring out(it, ring.end());
  out.insert(out.end(), ring.begin(), it);
  return out;
}

Polygon canonical_polygon(const Polygon& poly) {
  Polygon out;
  out.outer = canonical_ring(poly.outer);
  for (const auto& h : poly.holes) out.holes.push_back(canonical_ring(h));
  std::sort(out.holes.begin(), out.holes.end());
  return out;
}

std::size_t Bitmask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](uint8_t b) { return b != 0; }));
}

std::vector<Polygon> trace_components(const Bitmask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<std::vector<std::pair<int, int>>> components;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t k = static_cast<std::size_t>(r) * w + c;
      if (!mask.bits[k] || label[k] >= 0) continue;
      const int id = static_cast<int>(components.size());
      components.emplace_back();
      auto& pixels = components.back();
      label[k] = id;
      pixels.push_back({c, r});
      for (std::size_t head = 0; head < pixels.size(); ++head) {
        const auto [pc, pr] = pixels[head];
        const int dc[] = {1, -1, 0, 0}, dr[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int nc = pc + dc[d], nr = pr + dr[d];
          if (nc < 0 || nr < 0 || nc >= w || nr >= h) continue;
          const std::size_t nk = static_cast<std::size_t>(nr) * w + nc;
          if (mask.bits[nk] && label[nk] < 0) {
            label[nk] = id;
            pixels.push_back({nc, nr});
          }
        }
      }
    }
  }

  auto inside = [&](int c, int r) { return c >= 0 && r >= 0 && c < w && r < h && mask.at(c, r); };
  struct Edge {
    int i0, j0, i1, j1;
    bool used = false;
  };
  std::vector<Polygon> out;
  for (const auto& pixels : components) {
    // Directed boundary edges between pixel corners (corner (i, j) is the top-left
    // corner of pixel (i, j)), oriented with the component on the left when y points up.
    std::vector<Edge> edges;
    for (const auto& [c, r] : pixels) {
      if (!inside(c, r + 1)) edges.push_back({c, r + 1, c + 1, r + 1});
      if (!inside(c + 1, r)) edges.push_back({c + 1, r + 1, c + 1, r});
      if (!inside(c, r - 1)) edges.push_back({c + 1, r, c, r});
      if (!inside(c - 1, r)) edges.push_back({c, r, c, r + 1});
    }
    auto key = [](int i, int j) { return (static_cast<int64_t>(i) << 32) ^ static_cast<uint32_t>(j); };
    std::unordered_map<int64_t, std::vector<std::size_t>> starts;
    starts.reserve(edges.size() * 2);
    for (std::size_t e = 0; e < edges.size(); ++e) starts[key(edges[e].i0, edges[e].j0)].push_back(e);

    std::vector<Ring> rings;
    for (std::size_t first = 0; first < edges.size(); ++first) {
      if (edges[first].used) continue;
      Ring ring;
      std::size_t cur = first;
      while (true) {
        Edge& e = edges[cur];
        e.used = true;
        ring.push_back({e.i0 - 0.5, e.j0 - 0.5});
        const int di = e.i1 - e.i0, dj = e.j1 - e.j0;
        // at a saddle prefer the right turn, then straight, then left: the
        // diagonal pixels stay joined and every ring stays simple
        const int pref[3][2] = {{-dj, di}, {di, dj}, {dj, -di}};
        std::size_t next = edges.size();
        for (const auto& p : pref) {
          for (std::size_t cand : starts[key(e.i1, e.j1)]) {
            const Edge& ce = edges[cand];
            if (ce.i1 - ce.i0 != p[0] || ce.j1 - ce.j0 != p[1]) continue;
            if (!ce.used || cand == first) {
              next = cand;
              break;
            }
          }
          if (next != edges.size()) break;
        }
        if (next == first || next == edges.size()) break;
        cur = next;
      }
      rings.push_back(remove_collinear(ring));
    }

    Polygon poly;
    std::size_t outer = 0;
    double best = -INFINITY;
    for (std::size_t i = 0; i < rings.size(); ++i) {
      const double a = screen_signed_area(rings[i]);
      if (a > best) best = a, outer = i;
    }
    for (std::size_t i = 0; i < rings.size(); ++i) {
      if (i == outer) {
        poly.outer = std::move(rings[i]);
      } else {
        poly.holes.push_back(std::move(rings[i]));
      }
    }
    out.push_back(std::move(poly));
  }
  return out;
}

Bitmask rasterize(const Polygon& poly, int width, int height) {
  Bitmask mask(width, height);
  std::vector<double> xs;
  for (int r = 0; r < height; ++r) {
    xs.clear();
    const double y = -static_cast<double>(r);  // y-up frame, as ring_contains uses
    collect_crossings(poly.outer, y, true, xs);
    for (const auto& hole : poly.holes) collect_crossings(hole, y, true, xs);
    std::sort(xs.begin(), xs.end());
    // pixel c is inside when an odd number of crossings lie strictly right of it
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const long c0 = std::max(0L, static_cast<long>(std::ceil(xs[k])));
      const long c1 = std::min(static_cast<long>(width), static_cast<long>(std::ceil(xs[k + 1])));
      for (long c = c0; c < c1; ++c) mask.set(static_cast<int>(c), r);
    }
  }
  return mask;
}

}  // namespace pai
