#include "pai/sidewalk_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <climits>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <json.hpp>

#include "pai/error.hpp"

namespace pai {
namespace {

// Neighbour offsets in ring order: N, NE, E, SE, S, SW, W, NW (row grows downward).
constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

struct Occupancy {
  int w = 0, h = 0;
  std::vector<uint8_t> v;
  uint8_t at(int c, int r) const { return c < 0 || r < 0 || c >= w || r >= h ? 0 : v[std::size_t(r) * w + c]; }
  uint8_t& ref(int c, int r) { return v[std::size_t(r) * w + c]; }
};

Occupancy morph(const Occupancy& g, bool dilate) {
  Occupancy out = g;
  for (int r = 0; r < g.h; ++r) {
    for (int c = 0; c < g.w; ++c) {
      bool any = false, all = true;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const bool on = g.at(c + dc, r + dr);
          any = any || on;
          all = all && on;
        }
      }
      out.ref(c, r) = dilate ? any : all;
    }
  }
  return out;
}

void zhang_suen(Occupancy& g) {
  bool changed = true;
  std::vector<std::pair<int, int>> kill;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      kill.clear();
      for (int r = 0; r < g.h; ++r) {
        for (int c = 0; c < g.w; ++c) {
          if (!g.at(c, r)) continue;
          int p[8];
          for (int k = 0; k < 8; ++k) p[k] = g.at(c + kDc[k], r + kDr[k]);
          const int b = std::accumulate(p, p + 8, 0);
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int k = 0; k < 8; ++k) a += !p[k] && p[(k + 1) % 8];
          if (a != 1) continue;
          // p[0] = N, p[2] = E, p[4] = S, p[6] = W
          if (pass == 0 && ((p[0] && p[2] && p[4]) || (p[2] && p[4] && p[6]))) continue;
          if (pass == 1 && ((p[0] && p[2] && p[6]) || (p[0] && p[4] && p[6]))) continue;
          kill.push_back({c, r});
        }
      }
      for (auto [c, r] : kill) g.ref(c, r) = 0;
      changed = changed || !kill.empty();
    }
  }
}

int neighbour_count(const Occupancy& g, int c, int r) {
  int n = 0;
  for (int k = 0; k < 8; ++k) n += g.at(c + kDc[k], r + kDr[k]);
  return n;
}

// Removes staircase corners: a pixel with two perpendicular 4-neighbours whose
// neighbours stay 8-connected without it.
void reduce_to_minimal(Occupancy& g) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < g.h; ++r) {
      for (int c = 0; c < g.w; ++c) {
        if (!g.at(c, r)) continue;
        int on[8], n = 0;
        for (int k = 0; k < 8; ++k) {
          if (g.at(c + kDc[k], r + kDr[k])) on[n++] = k;
        }
        if (n < 2) continue;
        const bool corner = (g.at(c, r - 1) && g.at(c + 1, r)) || (g.at(c + 1, r) && g.at(c, r + 1)) ||
                            (g.at(c, r + 1) && g.at(c - 1, r)) || (g.at(c - 1, r) && g.at(c, r - 1));
        if (!corner) continue;
        // components among the neighbours
        int parent[8];
        std::iota(parent, parent + 8, 0);
        auto find = [&](int x) {
          while (parent[x] != x) x = parent[x] = parent[parent[x]];
          return x;
        };
        for (int i = 0; i < n; ++i) {
          for (int j = i + 1; j < n; ++j) {
            if (std::abs(kDc[on[i]] - kDc[on[j]]) <= 1 && std::abs(kDr[on[i]] - kDr[on[j]]) <= 1) {
              parent[find(i)] = find(j);
            }
          }
        }
        int comps = 0;
        for (int i = 0; i < n; ++i) comps += find(i) == i;
        if (comps == 1) {
          g.ref(c, r) = 0;
          changed = true;
        }
      }
    }
  }
}

struct Arc {
  std::vector<std::pair<int, int>> pixels;
  double length_cells = 0.0;
};

std::vector<Arc> trace_arcs(const Occupancy& g) {
  auto key = [&](int c, int r) { return std::size_t(r) * g.w + c; };
  std::vector<uint8_t> visited_pixel(g.v.size(), 0);
  std::set<std::pair<std::size_t, std::size_t>> used_steps;
  auto step_used = [&](std::size_t a, std::size_t b) { return used_steps.count({a, b}) > 0; };
  auto is_node = [&](int c, int r) { return neighbour_count(g, c, r) != 2; };
  std::vector<Arc> arcs;

  auto walk = [&](int c0, int r0, int c1, int r1) {
    Arc arc;
    arc.pixels.push_back({c0, r0});
    int pc = c0, pr = r0, cc = c1, cr = r1;
    visited_pixel[key(c0, r0)] = 1;
    while (true) {
      arc.length_cells += (pc != cc && pr != cr) ? std::sqrt(2.0) : 1.0;
      arc.pixels.push_back({cc, cr});
      visited_pixel[key(cc, cr)] = 1;
      if (is_node(cc, cr) || (cc == c0 && cr == r0)) {
        used_steps.insert({key(cc, cr), key(pc, pr)});
        break;
      }
      int nc = -1, nr = -1;
      for (int k = 0; k < 8; ++k) {
        const int qc = cc + kDc[k], qr = cr + kDr[k];
        if (g.at(qc, qr) && !(qc == pc && qr == pr)) {
          nc = qc, nr = qr;
          break;
        }
      }
      if (nc < 0) break;
      pc = cc, pr = cr, cc = nc, cr = nr;
    }
    return arc;
  };

  for (int r = 0; r < g.h; ++r) {
    for (int c = 0; c < g.w; ++c) {
      if (!g.at(c, r) || !is_node(c, r)) continue;
      visited_pixel[key(c, r)] = 1;
      for (int k = 0; k < 8; ++k) {
        const int qc = c + kDc[k], qr = r + kDr[k];
        if (!g.at(qc, qr) || step_used(key(c, r), key(qc, qr))) continue;
        used_steps.insert({key(c, r), key(qc, qr)});
        arcs.push_back(walk(c, r, qc, qr));
      }
    }
  }
  // closed loops without any node
  for (int r = 0; r < g.h; ++r) {
    for (int c = 0; c < g.w; ++c) {
      if (!g.at(c, r) || visited_pixel[key(c, r)]) continue;
      for (int k = 0; k < 8; ++k) {
        const int qc = c + kDc[k], qr = r + kDr[k];
        if (g.at(qc, qr)) {
          arcs.push_back(walk(c, r, qc, qr));
          break;
        }
      }
    }
  }
  return arcs;
}

void prune_spurs(Occupancy& g, double min_cells) {
  while (true) {
    bool removed = false;
    for (const Arc& arc : trace_arcs(g)) {
      const auto [c0, r0] = arc.pixels.front();
      const auto [c1, r1] = arc.pixels.back();
      const int d0 = neighbour_count(g, c0, r0), d1 = neighbour_count(g, c1, r1);
      const bool spur = (d0 == 1 && d1 >= 3) || (d1 == 1 && d0 >= 3);
      if (!spur || arc.length_cells >= min_cells) continue;
      const bool junction_last = d1 >= 3;
      for (std::size_t i = 0; i < arc.pixels.size(); ++i) {
        const bool is_junction = junction_last ? i + 1 == arc.pixels.size() : i == 0;
        if (!is_junction) g.ref(arc.pixels[i].first, arc.pixels[i].second) = 0;
      }
      removed = true;
    }
    if (!removed) return;
    reduce_to_minimal(g);
  }
}

// Principal-axis frame of the points' xy, origin at the centroid. The first
// axis points toward the point farthest from the centroid.
struct Frame {
  Eigen::Vector2d origin;
  Eigen::Vector2d e1, e2;
};

Frame principal_frame(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p.head<2>();
  c /= static_cast<double>(pts.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    const Eigen::Vector2d d = p.head<2>() - c;
    sxx += d.x() * d.x();
    syy += d.y() * d.y();
    sxy += d.x() * d.y();
  }
  const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
  Eigen::Vector2d e1(std::cos(theta), std::sin(theta));
  std::size_t far = 0;
  double best = -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i].head<2>() - c).squaredNorm();
    if (d > best) best = d, far = i;
  }
  if ((pts[far].head<2>() - c).dot(e1) < 0) e1 = -e1;
  return {c, e1, Eigen::Vector2d(-e1.y(), e1.x())};
}

struct PlaneFit {
  bool ok = false;
  double b = 0.0, c = 0.0;  // dz/d along, dz/d across
};

PlaneFit fit_plane(const std::vector<Eigen::Vector3d>& samples) {
  // z = a + b * along + c * across, centred for conditioning
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  Eigen::Vector2d atz = Eigen::Vector2d::Zero();
  for (const auto& s : samples) {
    const Eigen::Vector3d d = s - mean;
    ata += d.head<2>() * d.head<2>().transpose();
    atz += d.head<2>() * d.z();
  }
  const double det = ata.determinant();
  if (!(std::abs(det) > 1e-12 * std::max(1.0, ata.squaredNorm()))) return {};
  const Eigen::Vector2d sol = ata.inverse() * atz;
  return {true, sol.x(), sol.y()};
}

// One refit without points far off the first plane, so curb faces and
// street furniture caught in a mask do not tilt the surface.
PlaneFit fit_plane_trimmed(const std::vector<Eigen::Vector3d>& samples) {
  const PlaneFit first = fit_plane(samples);
  if (!first.ok) return first;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  std::vector<double> resid(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::Vector3d d = samples[i] - mean;
    resid[i] = std::abs(d.z() - first.b * d.x() - first.c * d.y());
  }
  std::vector<double> sorted = resid;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double mad = sorted[sorted.size() / 2];
  const double limit = std::max(3.0 * 1.4826 * mad, 0.01);  // metres
  std::vector<Eigen::Vector3d> kept;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (resid[i] <= limit) kept.push_back(samples[i]);
  }
  if (kept.size() == samples.size() || kept.size() < 3) return first;
  const PlaneFit second = fit_plane(kept);
  return second.ok ? second : first;
}

struct Polyline {
  std::vector<Eigen::Vector2d> pts;  // metres, local frame
  std::vector<double> cum;

  explicit Polyline(std::vector<Eigen::Vector2d> p) : pts(std::move(p)) {
    cum.assign(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  double length() const { return cum.empty() ? 0.0 : cum.back(); }
  Eigen::Vector2d at(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t i = it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    if (i == 0) return pts.front();
    const double seg = cum[i] - cum[i - 1];
    const double t = seg > 0 ? (s - cum[i - 1]) / seg : 0.0;
    return pts[i - 1] + t * (pts[i] - pts[i - 1]);
  }
};

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << *v;
  return out.str();
}

}  // namespace

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "percentile of no values");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<Eigen::Vector3d> class_points(const PointCloud& cloud, const LabeledCloud& labeled, FeatureClass c) {
  if (labeled.labels.size() != cloud.size()) {
    throw Error(ErrorKind::InvalidArgument, "labels do not match the cloud size");
  }
  std::vector<Eigen::Vector3d> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labeled.labels[i] == c) out.emplace_back(cloud.x(i), cloud.y(i), cloud.z(i));
  }
  return out;
}

std::vector<std::vector<Point2>> extract_centerline(const std::vector<Eigen::Vector3d>& points, LinearUnit unit,
                                                    const MetricsOptions& options) {
  if (points.empty()) return {};
  if (!(options.cell_m > 0)) throw Error(ErrorKind::InvalidArgument, "cell size must be positive");
  const double mpu = meters_per_unit(unit);
  const Frame f = principal_frame(points);
  const double cell = options.cell_m;

  std::vector<std::pair<long, long>> cells;
  cells.reserve(points.size());
  long imin = LONG_MAX, imax = LONG_MIN, jmin = LONG_MAX, jmax = LONG_MIN;
  for (const auto& p : points) {
    const Eigen::Vector2d d = (p.head<2>() - f.origin) * mpu;
    const long i = std::lround(std::floor(d.dot(f.e1) / cell + 0.5));
    const long j = std::lround(std::floor(d.dot(f.e2) / cell + 0.5));
    cells.push_back({i, j});
    imin = std::min(imin, i), imax = std::max(imax, i), jmin = std::min(jmin, j), jmax = std::max(jmax, j);
  }
  constexpr int pad = 2;
  const long gw = imax - imin + 1 + 2 * pad, gh = jmax - jmin + 1 + 2 * pad;
  if (gw * gh > 400'000'000L) {
    throw Error(ErrorKind::InvalidArgument, "centerline grid too large; increase the cell size");
  }
  Occupancy g{static_cast<int>(gw), static_cast<int>(gh), std::vector<uint8_t>(std::size_t(gw) * gh, 0)};
  // column = along the first axis, row = along the second
  for (auto [i, j] : cells) g.ref(static_cast<int>(i - imin + pad), static_cast<int>(j - jmin + pad)) = 1;
  g = morph(morph(g, true), false);
  zhang_suen(g);
  reduce_to_minimal(g);
  const double min_cells = options.min_arc_m / cell;
  prune_spurs(g, min_cells);

  std::vector<std::vector<Point2>> out;
  for (const Arc& arc : trace_arcs(g)) {
    if (arc.length_cells < min_cells) continue;
    Ring local;
    for (auto [c, r] : arc.pixels) local.push_back({double(c - pad + imin) * cell, double(r - pad + jmin) * cell});
    // open-polyline Douglas-Peucker via the closed-ring routine would join the ends; do it directly
    std::vector<bool> keep(local.size(), false);
    keep.front() = keep.back() = true;
    const double eps = 0.25 * cell;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, local.size() - 1}};
    while (!stack.empty()) {
      const auto [a, b] = stack.back();
      stack.pop_back();
      double best = -1;
      std::size_t idx = a;
      const Eigen::Vector2d pa(local[a].x, local[a].y), pb(local[b].x, local[b].y);
      for (std::size_t k = a + 1; k < b; ++k) {
        const Eigen::Vector2d q(local[k].x, local[k].y);
        const Eigen::Vector2d ab = pb - pa;
        const double t = ab.squaredNorm() > 0 ? std::clamp((q - pa).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.0;
        const double d = (q - (pa + t * ab)).norm();
        if (d > best) best = d, idx = k;
      }
      if (best > eps) {
        keep[idx] = true;
        stack.push_back({a, idx});
        stack.push_back({idx, b});
      }
    }
    std::vector<Point2> line;
    for (std::size_t k = 0; k < local.size(); ++k) {
      if (!keep[k]) continue;
      const Eigen::Vector2d w = f.origin + (local[k].x * f.e1 + local[k].y * f.e2) / mpu;
      line.push_back({w.x(), w.y()});
    }
    out.push_back(std::move(line));
  }
  return out;
}

SidewalkSegment measure_stations(const std::vector<Eigen::Vector3d>& points, const std::vector<Point2>& centerline,
                                 LinearUnit unit, const MetricsOptions& options) {
  if (centerline.size() < 2) throw Error(ErrorKind::InvalidArgument, "centerline needs at least two vertices");
  if (!(options.station_spacing_m > 0)) throw Error(ErrorKind::InvalidArgument, "station spacing must be positive");
  const double mpu = meters_per_unit(unit);
  const Eigen::Vector2d origin(centerline.front().x, centerline.front().y);
  auto local = [&](double x, double y) { return Eigen::Vector2d((Eigen::Vector2d(x, y) - origin) * mpu); };
  std::vector<Eigen::Vector2d> line;
  for (const auto& p : centerline) line.push_back(local(p.x, p.y));
  const Polyline poly(line);
  const double L = poly.length();
  const double spacing = options.station_spacing_m;
  if (L < spacing) {
    throw Error(ErrorKind::InvalidArgument, "centerline length " + std::to_string(L) + " m is shorter than the " +
                                                std::to_string(spacing) + " m station spacing");
  }

  // bucket index over the points in the local metric frame
  const double reach = std::max(spacing / 2, options.slope_window_m) + options.probe_halfwidth_m;
  const double bucket = std::max(reach, 1e-6);
  std::unordered_map<int64_t, std::vector<uint32_t>> buckets;
  std::vector<Eigen::Vector3d> pm(points.size());
  auto bkey = [](int64_t i, int64_t j) { return (i << 32) ^ (j & 0xffffffff); };
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Eigen::Vector2d q = local(points[k].x(), points[k].y());
    pm[k] = Eigen::Vector3d(q.x(), q.y(), points[k].z() * mpu);
    buckets[bkey(int64_t(std::floor(q.x() / bucket)), int64_t(std::floor(q.y() / bucket)))].push_back(uint32_t(k));
  }

  SidewalkSegment seg;
  seg.centerline = centerline;
  seg.length_m = L;
  const auto count = static_cast<std::size_t>(std::floor(L / spacing + 1e-9));
  for (std::size_t k = 0; k < count; ++k) {
    Station st;
    st.s_m = (static_cast<double>(k) + 0.5) * spacing;
    const Eigen::Vector2d p = poly.at(st.s_m);
    const double h = std::min({spacing / 2, st.s_m, L - st.s_m});
    Eigen::Vector2d t = poly.at(st.s_m + h) - poly.at(st.s_m - h);
    if (t.norm() < 1e-9) t = line.back() - line.front();
    t.normalize();
    const Eigen::Vector2d n(-t.y(), t.x());
    const Eigen::Vector2d w = origin + p / mpu;
    st.position = {w.x(), w.y()};

    std::vector<Eigen::Vector3d> width_win, slope_win;
    std::vector<double> across;
    const int64_t bi = int64_t(std::floor(p.x() / bucket)), bj = int64_t(std::floor(p.y() / bucket));
    for (int64_t di = -1; di <= 1; ++di) {
      for (int64_t dj = -1; dj <= 1; ++dj) {
        auto it = buckets.find(bkey(bi + di, bj + dj));
        if (it == buckets.end()) continue;
        for (uint32_t idx : it->second) {
          const Eigen::Vector2d d = pm[idx].head<2>() - p;
          const double a = d.dot(t), c = d.dot(n);
          if (std::abs(c) > options.probe_halfwidth_m) continue;
          if (std::abs(a) <= spacing / 2) {
            width_win.emplace_back(a, c, pm[idx].z());
            across.push_back(c);
          }
          if (std::abs(a) <= options.slope_window_m) slope_win.emplace_back(a, c, pm[idx].z());
        }
      }
    }
    st.point_count = width_win.size();
    if (width_win.size() >= options.min_points) {
      const double frac = (options.upper_percentile - options.lower_percentile) / 100.0;
      st.width_m = (percentile(across, options.upper_percentile) - percentile(across, options.lower_percentile)) / frac;
      const PlaneFit cross = fit_plane_trimmed(width_win);
      if (cross.ok) st.cross_slope_pct = 100.0 * std::abs(cross.c);
      if (slope_win.size() >= options.min_points) {
        const PlaneFit run = fit_plane_trimmed(slope_win);
        if (run.ok) st.running_slope_pct = 100.0 * std::abs(run.b);
      }
    }
    seg.stations.push_back(st);
  }
  return seg;
}

std::vector<SidewalkSegment> sidewalk_metrics(const PointCloud& cloud, const LabeledCloud& labeled, FeatureClass c,
                                              const MetricsOptions& options) {
  const auto pts = class_points(cloud, labeled, c);
  const LinearUnit unit = cloud.metadata().linear_unit;
  std::vector<SidewalkSegment> out;
  for (const auto& line : extract_centerline(pts, unit, options)) {
    double len = 0;
    for (std::size_t i = 1; i < line.size(); ++i) {
      len += std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y) * meters_per_unit(unit);
    }
    if (len < options.station_spacing_m) continue;
    out.push_back(measure_stations(pts, line, unit, options));
  }
  return out;
}

std::string segment_csv(const SidewalkSegment& segment) {
  std::ostringstream out;
  out << "s_m,width_m,running_slope_pct,cross_slope_pct\n";
  for (const auto& s : segment.stations) {
    out << fmt(s.s_m) << ',' << fmt(s.width_m) << ',' << fmt(s.running_slope_pct) << ',' << fmt(s.cross_slope_pct)
        << '\n';
  }
  return out.str();
}

std::string stations_csv(const std::vector<SidewalkSegment>& segments) {
  std::ostringstream out;
  out << "segment,s_m,width_m,running_slope_pct,cross_slope_pct\n";
  for (std::size_t k = 0; k < segments.size(); ++k) {
    for (const auto& s : segments[k].stations) {
      out << k << ',' << fmt(s.s_m) << ',' << fmt(s.width_m) << ',' << fmt(s.running_slope_pct) << ','
          << fmt(s.cross_slope_pct) << '\n';
    }
  }
  return out.str();
}

std::string metrics_geojson(const std::vector<SidewalkSegment>& segments, const std::string& crs_id) {
  using nlohmann::json;
  json doc;
  doc["type"] = "FeatureCollection";
  doc["crs_id"] = crs_id;
  doc["features"] = json::array();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (std::size_t k = 0; k < segments.size(); ++k) {
    json coords = json::array();
    for (const auto& p : segments[k].centerline) coords.push_back({p.x, p.y});
    doc["features"].push_back({{"type", "Feature"},
                               {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                               {"properties", {{"segment", k}, {"length_m", segments[k].length_m}}}});
    for (const auto& s : segments[k].stations) {
      doc["features"].push_back({{"type", "Feature"},
                                 {"geometry", {{"type", "Point"}, {"coordinates", {s.position.x, s.position.y}}}},
                                 {"properties",
                                  {{"segment", k},
                                   {"s_m", s.s_m},
                                   {"width_m", opt(s.width_m)},
                                   {"running_slope_pct", opt(s.running_slope_pct)},
                                   {"cross_slope_pct", opt(s.cross_slope_pct)},
                                   {"point_count", s.point_count}}}});
    }
  }
  return doc.dump(1) + "\n";
}

}  // namespace pai
