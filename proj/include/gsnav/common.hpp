#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gsnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// Agent and sensor constants of the Stretch-like embodiment.
namespace agent {
inline constexpr double kForwardStep = 0.25;
inline constexpr double kTurnStep = kPi / 6.0;
inline constexpr double kLookStep = kPi / 6.0;
inline constexpr double kMaxPitch = kPi / 3.0;
inline constexpr double kBaseRadius = 0.17;
inline constexpr double kHeight = 1.41;
inline constexpr double kCameraHeight = 1.31;
inline constexpr double kMinDepth = 0.5;
inline constexpr double kMaxDepth = 5.0;
inline constexpr double kHfovDeg = 42.0;
inline constexpr double kSuccessRadius = 1.0;
inline constexpr int kSubtaskStepLimit = 200;
}  // namespace agent

// Depth value written for pixels whose range is outside [kMinDepth, kMaxDepth].
inline constexpr float kInvalidDepth = 0.0f;

inline bool valid_depth(float d) { return d > 0.0f; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

// Snaps `a` to the nearest multiple of `step` when it is within 1e-9 of one,
// so repeated quantized turns do not accumulate rounding drift.
double snap_angle(double a, double step);

}  // namespace gsnav
