#include "gsnav/camera.hpp"

#include <cmath>

namespace gsnav {

double CameraIntrinsics::focal() const {
  return 0.5 * width / std::tan(0.5 * deg_to_rad(hfov_deg));
}

CameraIntrinsics CameraIntrinsics::scaled(int divisor) const {
  return {width / divisor, height / divisor, hfov_deg};
}

CameraFrame CameraFrame::from_pose(const Pose& pose) {
  CameraFrame f;
  f.origin = pose.position();
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  f.forward = Vec3(cy * cp, sy * cp, sp);
  f.right = Vec3(sy, -cy, 0.0);
  f.down = f.forward.cross(f.right);
  return f;
}

}  // namespace gsnav
