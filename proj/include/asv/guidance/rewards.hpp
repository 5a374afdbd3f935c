#pragma once

#include <vector>

#include "asv/guidance/path.hpp"

namespace asv::guidance {

struct RewardConfig {
  double u_max = 1.8;        // normalizing surge speed [m/s]
  double gamma_r = 0.1;      // path-reward offset
  double gamma_eps = 0.5;    // cross-track decay [1/m]
  double gamma_theta = 1.0;  // bearing weight sharpness [1/rad]
  double gamma_d = 0.1;      // obstacle distance decay [1/m]
  double gamma_psf = 1.0;    // filter-deviation penalty weight
  double lambda = 0.7;       // path vs anti-collision blend
  double r_collision = -1000.0;
  double r_exists = -0.05;   // per-step existence penalty
};

// One perceived obstacle sample for the anti-collision term: distance and
// relative bearing of a beam hit (missed beams enter with d = max range).
struct BeamSample {
  double distance = 0.0;  // [m]
  double bearing = 0.0;   // [rad], vessel-relative
};

// Path-following reward in (-inf, (1+gamma_r)^2 - gamma_r^2]; max when moving
// at u_max exactly along the path with zero cross-track error.
double reward_path(double surge, double heading_err, double cross_track,
                   const RewardConfig& cfg);

// Anti-collision penalty in [-1, 0]: proximity-weighted average over beams,
// weights favoring obstacles dead ahead.
double reward_colav(const std::vector<BeamSample>& beams,
                    const RewardConfig& cfg);

// Penalty for the safety filter overriding the agent, normalized by the
// input-box magnitude.
double reward_psf(const Vec3& u_agent, const Vec3& u_filtered,
                  const Vec3& u_box_magnitude, const RewardConfig& cfg);

// Total step reward: the collision value short-circuits everything else.
double reward_total(double r_path, double r_colav, double r_psf,
                    bool collided, const RewardConfig& cfg);

}  // namespace asv::guidance
