#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pai/pointcloud.hpp"
#include "pai/trajectory.hpp"

namespace pai {

/// Ideal pinhole intrinsics. Focal length in millimeters, pixel pitch in micrometers.
struct CameraIntrinsics {
  double focal_mm = 4.15;
  double pixel_um = 1.22;
  int width = 4032;
  int height = 3024;

  /// Focal length in pixels (both quantities converted to meters first).
  double focal_px() const { return (focal_mm * 1e-3) / (pixel_um * 1e-6); }
  double cx() const { return width / 2.0; }
  double cy() const { return height / 2.0; }

  /// A = [[f/ps, 0, w/2], [0, f/ps, h/2], [0, 0, 1]]
  Eigen::Matrix3d matrix() const;
  /// Same field of view at `factor` times the resolution.
  CameraIntrinsics scaled(double factor) const;
  void validate() const;
};

/// Extrinsics: camera center in cloud CRS and world-to-camera rotation
/// (camera x right, y down, z forward).
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  /// R_t = [R | -R T]
  Eigen::Matrix<double, 3, 4> rotation_translation() const;
  Eigen::Vector3d forward() const { return rotation.row(2).transpose(); }
  /// Throws InvalidArgument unless R is orthonormal with det +1 (1e-9).
  void validate() const;
};

/// Pinhole pose looking along horizontal `heading` (xy), pitched down by
/// `pitch_down_deg`, zero roll.
CameraPose look_along(const Eigen::Vector3d& position, const Eigen::Vector2d& heading,
                      double pitch_down_deg);

struct ProjectedPixel {
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;  // camera-frame depth
};

/// s [u v 1]^T = A R_t [X Y Z 1]^T; nullopt when s <= 0 (behind the camera).
std::optional<ProjectedPixel> project_point(const Eigen::Vector3d& world,
                                            const CameraIntrinsics& intr, const CameraPose& pose);
std::optional<ProjectedPixel> project_point(const LidarPoint& p, const CameraIntrinsics& intr,
                                            const CameraPose& pose);

enum class ViewDirection { Front, Left, Right };
std::string to_string(ViewDirection d);

struct CameraView {
  int station = 0;
  double arc_length = 0.0;
  ViewDirection direction = ViewDirection::Front;
  CameraPose pose;
};

struct CameraRig {
  double spacing = 0.0;          // cloud units between stations
  double height = 2.0;           // cloud units above the trajectory
  double pitch_down_deg = 10.0;
  double side_yaw_deg = 90.0;
};

struct CameraPlan {
  std::vector<CameraView> views;
  std::vector<std::string> warnings;
};

/// Stations at arc lengths (k + 1/2) * spacing, k = 0 .. floor(L / spacing) - 1;
/// each station yields a front view along the local tangent and two side
/// views yawed by +/- side_yaw_deg. Stations with a degenerate tangent are
/// skipped with a warning.
CameraPlan plan_cameras(const Trajectory& traj, const CameraRig& rig);

}  // namespace pai
