#include "asv/guidance/path.hpp"

#include <algorithm>
#include <cmath>

#include "asv/core/angles.hpp"

namespace asv::guidance {

PathSpec::PathSpec(std::vector<Vec2> waypoints) : wps_(std::move(waypoints)) {
  if (wps_.size() < 2) throw PathError("path needs at least two waypoints");
  cum_.resize(wps_.size());
  cum_[0] = 0.0;
  for (std::size_t i = 1; i < wps_.size(); ++i) {
    const double seg = (wps_[i] - wps_[i - 1]).norm();
    if (seg < 1e-9) throw PathError("path has duplicate consecutive waypoints");
    cum_[i] = cum_[i - 1] + seg;
  }
}

Vec2 PathSpec::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const std::size_t i =
      std::min(wps_.size() - 1,
               static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                   1, it - cum_.begin())));
  const double seg = cum_[i] - cum_[i - 1];
  const double a = (s - cum_[i - 1]) / seg;
  return (1.0 - a) * wps_[i - 1] + a * wps_[i];
}

Vec2 PathSpec::tangent_at(double s) const {
  s = std::clamp(s, 0.0, length());
  std::size_t i = 1;
  while (i + 1 < wps_.size() && s > cum_[i]) ++i;
  return (wps_[i] - wps_[i - 1]).normalized();
}

double PathSpec::project(const Vec2& p) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (std::size_t i = 1; i < wps_.size(); ++i) {
    const Vec2 a = wps_[i - 1], b = wps_[i];
    const Vec2 ab = b - a;
    const double tt = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 q = a + tt * ab;
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2 - 1e-12) {  // strict improvement keeps the earlier joint
      best_d2 = d2;
      best_s = cum_[i - 1] + tt * ab.norm();
    }
  }
  return best_s;
}

double cross_track_error(const PathSpec& path, const Vec2& p) {
  const double s = path.project(p);
  const Vec2 q = path.point_at(s);
  const Vec2 t = path.tangent_at(s);
  const Vec2 o = p - q;
  const double cross = t.x() * o.y() - t.y() * o.x();
  return cross >= 0.0 ? o.norm() : -o.norm();
}

double heading_error(const PathSpec& path, const Vec2& p, double psi) {
  const double s = path.project(p);
  const Vec2 t = path.tangent_at(s);
  return angle_diff(std::atan2(t.y(), t.x()), psi);
}

}  // namespace asv::guidance
