#include "gsnav/common.hpp"

#include <cmath>

namespace gsnav {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

double snap_angle(double a, double step) {
  const double k = std::round(a / step);
  if (std::abs(a - k * step) < 1e-9) return k * step;
  return a;
}

}  // namespace gsnav
