#pragma once

#include "gsnav/common.hpp"

#include <Eigen/Core>

namespace gsnav {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = agent::kCameraHeight;
  double yaw = 0.0;
  double pitch = 0.0;

  Vec2 xy() const { return {x, y}; }
  Vec3 position() const { return {x, y, z}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

// Pinhole intrinsics with square pixels; the vertical field of view follows
// from the aspect ratio.
struct CameraIntrinsics {
  int width = 160;
  int height = 120;
  double hfov_deg = agent::kHfovDeg;

  double focal() const;
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
  int pixel_count() const { return width * height; }

  static CameraIntrinsics desk() { return {160, 120, agent::kHfovDeg}; }
  static CameraIntrinsics full() { return {640, 480, agent::kHfovDeg}; }
  CameraIntrinsics scaled(int divisor) const;
};

// World-from-camera frame. Camera axes: x right, y down, z forward. World: z up.
struct CameraFrame {
  Vec3 origin;
  Vec3 right;
  Vec3 down;
  Vec3 forward;

  static CameraFrame from_pose(const Pose& pose);

  Vec3 to_camera(const Vec3& world) const {
    const Vec3 d = world - origin;
    return {d.dot(right), d.dot(down), d.dot(forward)};
  }
  Vec3 to_world_dir(const Vec3& cam) const {
    return cam.x() * right + cam.y() * down + cam.z() * forward;
  }
};

// Unnormalized camera-space ray through the center of pixel (row, col), z = 1.
inline Vec3 pixel_ray_camera(const CameraIntrinsics& k, int row, int col) {
  const double f = k.focal();
  return {(col + 0.5 - k.cx()) / f, (row + 0.5 - k.cy()) / f, 1.0};
}

}  // namespace gsnav
