#pragma once

#include <stdexcept>
#include <vector>

#include "asv/core/types.hpp"

namespace asv::guidance {

struct PathError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Piecewise-linear reference path. Needs at least two distinct waypoints.
class PathSpec {
 public:
  explicit PathSpec(std::vector<Vec2> waypoints);

  const std::vector<Vec2>& waypoints() const { return wps_; }
  double length() const { return cum_.back(); }

  // Point and unit tangent at arc length s (clamped to [0, length]).
  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;

  // Arc length of the closest point on the path to p. Ties at segment joints
  // resolve to the earlier arc length.
  double project(const Vec2& p) const;

 private:
  std::vector<Vec2> wps_;
  std::vector<double> cum_;  // cumulative arc length per waypoint
};

// Signed cross-track error: distance from p to the path, positive when p lies
// to port of the local path direction (left of the tangent).
double cross_track_error(const PathSpec& path, const Vec2& p);

// Shortest signed angle between the local path-tangent course and the vessel
// heading: zero when aligned, +pi when reversed.
double heading_error(const PathSpec& path, const Vec2& p, double psi);

}  // namespace asv::guidance
