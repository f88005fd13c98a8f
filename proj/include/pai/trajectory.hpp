#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "pai/pointcloud.hpp"

namespace pai {

struct TrajectorySample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double t = 0.0;
};

/// Navigation-system path of the mapping vehicle, parameterized by arc length.
class Trajectory {
 public:
  /// Throws InvalidArgument unless timestamps strictly increase and
  /// consecutive samples are distinct.
  explicit Trajectory(std::vector<TrajectorySample> samples);

  const std::vector<TrajectorySample>& samples() const { return samples_; }
  double arc_length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  /// Position at arc length `s`, clamped to [0, arc_length()].
  Eigen::Vector3d position_at(double s) const;

  /// True when every sample lies within `box` (inclusive, with `tolerance`).
  bool within(const Extent2D& box, double tolerance = 0.0) const;

 private:
  std::vector<TrajectorySample> samples_;
  std::vector<double> cumulative_;
};

/// Reads `x,y,z,t` lines; `#` starts a comment, blank lines are skipped.
Trajectory load_trajectory_csv(const std::filesystem::path& path);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace pai
