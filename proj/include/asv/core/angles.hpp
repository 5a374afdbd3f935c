#pragma once

#include <cmath>

namespace asv {

// Wrap an angle to (-pi, pi]. Both +pi and -pi inputs map to +pi.
inline double wrap_angle(double a) {
  double x = std::fmod(a + M_PI, 2.0 * M_PI);
  if (x <= 0.0) x += 2.0 * M_PI;  // x in (0, 2pi]
  return x - M_PI;
}

// Shortest signed angle from b to a, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

}  // namespace asv
