#include "pai/camera.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "pai/error.hpp"

namespace pai {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d a;
  const double f = focal_px();
  a << f, 0.0, cx(), 0.0, f, cy(), 0.0, 0.0, 1.0;
  return a;
}

CameraIntrinsics CameraIntrinsics::scaled(double factor) const {
  CameraIntrinsics out = *this;
  out.width = static_cast<int>(std::lround(width * factor));
  out.height = static_cast<int>(std::lround(height * factor));
  out.pixel_um = pixel_um / factor;
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(focal_mm > 0 && pixel_um > 0 && width > 0 && height > 0)) {
    throw Error(ErrorKind::InvalidArgument, "camera intrinsics must be positive");
  }
}

Eigen::Matrix<double, 3, 4> CameraPose::rotation_translation() const {
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = rotation;
  rt.col(3) = -rotation * position;
  return rt;
}

void CameraPose::validate() const {
  const double ortho = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "camera rotation is not a proper rotation");
  }
  if (!position.allFinite()) throw Error(ErrorKind::InvalidArgument, "camera position not finite");
}

CameraPose look_along(const Eigen::Vector3d& position, const Eigen::Vector2d& heading,
                      double pitch_down_deg) {
  const Eigen::Vector2d h = heading.normalized();
  const double pitch = pitch_down_deg * std::numbers::pi / 180.0;
  const Eigen::Vector3d forward(std::cos(pitch) * h.x(), std::cos(pitch) * h.y(), -std::sin(pitch));
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  CameraPose pose;
  pose.position = position;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  return pose;
}

std::optional<ProjectedPixel> project_point(const Eigen::Vector3d& world,
                                            const CameraIntrinsics& intr, const CameraPose& pose) {
  // R_t [X 1]^T evaluated as R (X - T) to keep precision with large map coordinates.
  const Eigen::Vector3d cam = pose.rotation * (world - pose.position);
  const double s = cam.z();
  if (!(s > 0.0)) return std::nullopt;
  const Eigen::Vector3d h = intr.matrix() * cam;
  return ProjectedPixel{h.x() / s, h.y() / s, s};
}

std::optional<ProjectedPixel> project_point(const LidarPoint& p, const CameraIntrinsics& intr,
                                            const CameraPose& pose) {
  return project_point(Eigen::Vector3d(p.x, p.y, p.z), intr, pose);
}

std::string to_string(ViewDirection d) {
  switch (d) {
    case ViewDirection::Front: return "front";
    case ViewDirection::Left: return "left";
    case ViewDirection::Right: return "right";
  }
  return "front";
}

CameraPlan plan_cameras(const Trajectory& traj, const CameraRig& rig) {
  if (!(rig.spacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "station spacing must be positive");
  const double length = traj.arc_length();
  // tolerate rounding so that e.g. 100 / 12.5 yields 8 stations
  const double ratio = length / rig.spacing;
  const long stations = static_cast<long>(std::floor(ratio + 1e-9));
  if (stations < 1) {
    throw Error(ErrorKind::InvalidArgument, "trajectory arc length " + std::to_string(length) +
                                                " is shorter than the station spacing");
  }
  const double yaw = rig.side_yaw_deg * std::numbers::pi / 180.0;
  const Eigen::Rotation2Dd to_left(yaw);
  const Eigen::Rotation2Dd to_right(-yaw);

  CameraPlan plan;
  for (long k = 0; k < stations; ++k) {
    const double s = (k + 0.5) * rig.spacing;
    const double half = std::min({rig.spacing / 2.0, s, length - s});
    const Eigen::Vector3d ahead = traj.position_at(s + half);
    const Eigen::Vector3d behind = traj.position_at(s - half);
    const Eigen::Vector2d chord = (ahead - behind).head<2>();
    if (chord.norm() <= 1e-9 * std::max(1.0, rig.spacing)) {
      plan.warnings.push_back("station " + std::to_string(k) + " at s=" + std::to_string(s) +
                              " skipped: degenerate trajectory tangent");
      continue;
    }
    const Eigen::Vector2d heading = chord.normalized();
    Eigen::Vector3d center = traj.position_at(s);
    center.z() += rig.height;
    const int station = static_cast<int>(k);
    plan.views.push_back({station, s, ViewDirection::Front, look_along(center, heading, rig.pitch_down_deg)});
    plan.views.push_back(
        {station, s, ViewDirection::Left, look_along(center, to_left * heading, rig.pitch_down_deg)});
    plan.views.push_back(
        {station, s, ViewDirection::Right, look_along(center, to_right * heading, rig.pitch_down_deg)});
  }
  return plan;
}

}  // namespace pai
