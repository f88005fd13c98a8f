#pragma once

#include <cstddef>
#include <vector>

namespace pai {

/// Row-major dense 2D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// Grayscale erosion / dilation with a disk of `radius` cells; windows are
/// clipped at the grid border.
Grid<double> erode_disk(const Grid<double>& g, int radius);
Grid<double> dilate_disk(const Grid<double>& g, int radius);
Grid<double> open_disk(const Grid<double>& g, int radius);

/// Fills NaN cells from the nearest finite cell (breadth-first over the
/// 8-neighbourhood, ties resolved by scan order). Returns false if no cell is finite.
bool inpaint_nearest(Grid<double>& g);

/// Bilinear sample of cell-centered values; (fx, fy) are fractional cell
/// coordinates where integer values hit cell centers. Clamped at borders.
double sample_bilinear(const Grid<double>& g, double fc, double fr);

}  // namespace pai
