#include "asv/guidance/rewards.hpp"

#include <cmath>

namespace asv::guidance {

double reward_path(double surge, double heading_err, double cross_track,
                   const RewardConfig& cfg) {
  const double speed_term = (surge / cfg.u_max) * std::cos(heading_err) + cfg.gamma_r;
  const double track_term = std::exp(-cfg.gamma_eps * std::abs(cross_track)) + cfg.gamma_r;
  return speed_term * track_term - cfg.gamma_r * cfg.gamma_r;
}

double reward_colav(const std::vector<BeamSample>& beams,
                    const RewardConfig& cfg) {
  if (beams.empty()) return 0.0;
  double num = 0.0, den = 0.0;
  for (const auto& b : beams) {
    const double w = 1.0 / (1.0 + cfg.gamma_theta * std::abs(b.bearing));
    num += w * std::exp(-cfg.gamma_d * b.distance);
    den += w;
  }
  return -num / den;
}

double reward_psf(const Vec3& u_agent, const Vec3& u_filtered,
                  const Vec3& u_box_magnitude, const RewardConfig& cfg) {
  return -cfg.gamma_psf * (u_agent - u_filtered).norm() / u_box_magnitude.norm();
}

double reward_total(double r_path, double r_colav, double r_psf,
                    bool collided, const RewardConfig& cfg) {
  if (collided) return cfg.r_collision;
  return cfg.lambda * r_path + (1.0 - cfg.lambda) * r_colav + r_psf +
         cfg.r_exists;
}

}  // namespace asv::guidance
