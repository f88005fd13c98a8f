#include "pai/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pai/error.hpp"

namespace pai {

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "trajectory needs at least two samples");
  }
  cumulative_.reserve(samples_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const auto& a = samples_[i - 1];
    const auto& b = samples_[i];
    if (!(b.t > a.t)) {
      throw Error(ErrorKind::InvalidArgument,
                  "trajectory timestamps not strictly increasing at sample " + std::to_string(i));
    }
    const double d = std::hypot(b.x - a.x, b.y - a.y, b.z - a.z);
    if (d == 0.0) {
      throw Error(ErrorKind::InvalidArgument,
                  "trajectory samples " + std::to_string(i - 1) + " and " + std::to_string(i) +
                      " coincide");
    }
    cumulative_.push_back(cumulative_.back() + d);
  }
}

Eigen::Vector3d Trajectory::position_at(double s) const {
  const auto& front = samples_.front();
  const auto& back = samples_.back();
  if (s <= 0.0) return {front.x, front.y, front.z};
  if (s >= arc_length()) return {back.x, back.y, back.z};
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());  // s in [cum[i-1], cum[i])
  const auto& a = samples_[i - 1];
  const auto& b = samples_[i];
  const double t = (s - cumulative_[i - 1]) / (cumulative_[i] - cumulative_[i - 1]);
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
}

bool Trajectory::within(const Extent2D& box, double tolerance) const {
  for (const auto& s : samples_) {
    if (s.x < box.min_x - tolerance || s.x > box.max_x + tolerance ||
        s.y < box.min_y - tolerance || s.y > box.max_y + tolerance) {
      return false;
    }
  }
  return true;
}

Trajectory load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open trajectory '" + path.string() + "'");
  std::vector<TrajectorySample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    TrajectorySample s;
    std::string extra;
    if (!(fields >> s.x >> s.y >> s.z >> s.t) || (fields >> extra)) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) +
                                        ": expected 'x,y,z,t'");
    }
    samples.push_back(s);
  }
  return Trajectory(std::move(samples));
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write trajectory '" + path.string() + "'");
  out << "# x,y,z,t\n";
  out.precision(17);
  for (const auto& s : traj.samples()) out << s.x << ',' << s.y << ',' << s.z << ',' << s.t << '\n';
}

}  // namespace pai
