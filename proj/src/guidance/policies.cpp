#include "asv/guidance/policies.hpp"

#include <algorithm>
#include <cmath>

#include "asv/core/angles.hpp"

namespace asv::guidance {

PolicyKind policy_from_string(const std::string& s) {
  if (s == "los") return PolicyKind::kLosFollow;
  if (s == "constant") return PolicyKind::kConstantAhead;
  if (s == "random") return PolicyKind::kRandom;
  if (s == "adversarial") return PolicyKind::kAdversarialTowardNearestObstacle;
  throw PathError("unknown policy '" + s + "'");
}

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kLosFollow: return "los";
    case PolicyKind::kConstantAhead: return "constant";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kAdversarialTowardNearestObstacle: return "adversarial";
  }
  return "?";
}

ScriptedPolicy::ScriptedPolicy(PolicyKind kind,
                               const vessel::VesselParams& params,
                               std::uint64_t seed, LosConfig los)
    : kind_(kind), params_(params), los_(los), rng_(seed, "policy") {}

namespace {

double clampc(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

// Steady-state surge force for a target speed (feedforward).
double surge_ff(const vessel::VesselParams& p, double u_ref) {
  return (p.d_lin(0) + p.d_quad(0) * std::abs(u_ref)) * u_ref;
}

}  // namespace

PolicyAction ScriptedPolicy::act(const vessel::VesselState& s,
                                 const PathSpec& path,
                                 const PolicyWorldView& world) {
  const Vec3 lb = params_.tau_lb, ub = params_.tau_ub;
  vessel::ControlInput u;

  switch (kind_) {
    case PolicyKind::kLosFollow: {
      const Vec2 p(s.x, s.y);
      const double s_on = path.project(p);
      const Vec2 target = path.point_at(s_on + los_.lookahead);
      const double bearing = std::atan2(target.y() - s.y, target.x() - s.x);
      const double err = angle_diff(bearing, s.psi);
      u.tau_u = clampc(surge_ff(params_, los_.cruise_speed) +
                           los_.k_surge * (los_.cruise_speed - s.u),
                       lb(0), ub(0));
      u.tau_v = 0.0;
      u.tau_r = clampc(los_.k_heading * err - los_.k_yaw_damp * s.r,
                       std::max(lb(2), -los_.tau_r_cap),
                       std::min(ub(2), los_.tau_r_cap));
      break;
    }
    case PolicyKind::kConstantAhead: {
      u.tau_u = clampc(surge_ff(params_, los_.cruise_speed), lb(0), ub(0));
      u.tau_v = 0.0;
      u.tau_r = 0.0;
      break;
    }
    case PolicyKind::kRandom: {
      u.tau_u = rng_.uniform(lb(0), ub(0));
      u.tau_v = rng_.uniform(lb(1), ub(1));
      u.tau_r = rng_.uniform(lb(2), ub(2));
      break;
    }
    case PolicyKind::kAdversarialTowardNearestObstacle: {
      if (world.obstacle_centers.empty()) {
        // Nothing to chase: fall through to plain full-ahead.
        u.tau_u = ub(0);
        u.tau_v = 0.0;
        u.tau_r = 0.0;
        break;
      }
      const Vec2 p(s.x, s.y);
      const Vec2 nearest = *std::min_element(
          world.obstacle_centers.begin(), world.obstacle_centers.end(),
          [&](const Vec2& a, const Vec2& b) {
            return (a - p).squaredNorm() < (b - p).squaredNorm();
          });
      const double bearing = std::atan2(nearest.y() - s.y, nearest.x() - s.x);
      const double err = angle_diff(bearing, s.psi);
      u.tau_u = ub(0);  // full ahead, straight at it
      u.tau_v = 0.0;
      u.tau_r = clampc(3.0 * err - 1.0 * s.r, lb(2), ub(2));
      break;
    }
  }
  return {u, kind_};
}

}  // namespace asv::guidance
