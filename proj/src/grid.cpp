#include "pai/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace pai {
namespace {

// Sliding min/max of half-width w along each row (monotonic deque).
template <typename Better>
Grid<double> row_extreme(const Grid<double>& g, int w, Better better) {
  Grid<double> out(g.rows(), g.cols());
  std::deque<int> dq;
  for (int r = 0; r < g.rows(); ++r) {
    dq.clear();
    int next = 0;
    for (int c = 0; c < g.cols(); ++c) {
      const int hi = std::min(g.cols() - 1, c + w);
      for (; next <= hi; ++next) {
        while (!dq.empty() && !better(g(r, dq.back()), g(r, next))) dq.pop_back();
        dq.push_back(next);
      }
      while (dq.front() < c - w) dq.pop_front();
      out(r, c) = g(r, dq.front());
    }
  }
  return out;
}

template <typename Better>
Grid<double> disk_filter(const Grid<double>& g, int radius, Better better, double identity) {
  if (radius <= 0) return g;
  // A disk is the union of horizontal spans; evaluate each distinct span
  // half-width once per row, then combine over vertical offsets.
  std::vector<int> half(radius + 1);
  for (int dy = 0; dy <= radius; ++dy) {
    half[dy] = static_cast<int>(std::floor(std::sqrt(double(radius) * radius - double(dy) * dy)));
  }
  std::vector<Grid<double>> spans(radius + 2);
  std::vector<bool> have(radius + 2, false);
  Grid<double> out(g.rows(), g.cols(), identity);
  for (int dy = -radius; dy <= radius; ++dy) {
    const int w = half[std::abs(dy)];
    if (!have[w]) {
      spans[w] = row_extreme(g, w, better);
      have[w] = true;
    }
    const auto& s = spans[w];
    for (int r = 0; r < g.rows(); ++r) {
      const int rr = r + dy;
      if (rr < 0 || rr >= g.rows()) continue;
      for (int c = 0; c < g.cols(); ++c) {
        if (better(s(rr, c), out(r, c))) out(r, c) = s(rr, c);
      }
    }
  }
  return out;
}

}  // namespace

Grid<double> erode_disk(const Grid<double>& g, int radius) {
  return disk_filter(g, radius, [](double a, double b) { return a < b; },
                     std::numeric_limits<double>::infinity());
}

Grid<double> dilate_disk(const Grid<double>& g, int radius) {
  return disk_filter(g, radius, [](double a, double b) { return a > b; },
                     -std::numeric_limits<double>::infinity());
}

Grid<double> open_disk(const Grid<double>& g, int radius) {
  return dilate_disk(erode_disk(g, radius), radius);
}

bool inpaint_nearest(Grid<double>& g) {
  std::deque<std::pair<int, int>> frontier;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      if (std::isfinite(g(r, c))) frontier.emplace_back(r, c);
    }
  }
  if (frontier.empty()) return false;
  Grid<unsigned char> done(g.rows(), g.cols(), 0);
  for (auto [r, c] : frontier) done(r, c) = 1;
  while (!frontier.empty()) {
    auto [r, c] = frontier.front();
    frontier.pop_front();
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if (!g.in_bounds(rr, cc) || done(rr, cc)) continue;
        done(rr, cc) = 1;
        g(rr, cc) = g(r, c);
        frontier.emplace_back(rr, cc);
      }
    }
  }
  return true;
}

double sample_bilinear(const Grid<double>& g, double fc, double fr) {
  fc = std::clamp(fc, 0.0, double(g.cols() - 1));
  fr = std::clamp(fr, 0.0, double(g.rows() - 1));
  const int c0 = static_cast<int>(std::floor(fc));
  const int r0 = static_cast<int>(std::floor(fr));
  const int c1 = std::min(c0 + 1, g.cols() - 1);
  const int r1 = std::min(r0 + 1, g.rows() - 1);
  const double tc = fc - c0, tr = fr - r0;
  const double top = g(r0, c0) * (1 - tc) + g(r0, c1) * tc;
  const double bot = g(r1, c0) * (1 - tc) + g(r1, c1) * tc;
  return top * (1 - tr) + bot * tr;
}

}  // namespace pai
