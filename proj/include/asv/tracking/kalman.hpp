#pragma once

#include <optional>
#include <vector>

#include "asv/tracking/measurement.hpp"

namespace asv::tracking {

struct FilterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constant-velocity belief: x = [px, py, vx, vy].
struct KinematicState {
  Vec4 x = Vec4::Zero();
  Mat4 P = Mat4::Identity();
  double t = 0.0;
};

struct NoiseModel {
  double q = 0.05;                    // white-noise acceleration PSD [m^2/s^3]
  Mat2 R_ais = 25.0 * Mat2::Identity();
  double lidar_base_var = 1.0;        // [m^2], pre residual scaling
  double lidar_rms_ref = 0.3;         // [m]
};

// Position-only observation model.
inline Eigen::Matrix<double, 2, 4> obs_matrix() {
  Eigen::Matrix<double, 2, 4> H;
  H << 1, 0, 0, 0,
       0, 1, 0, 0;
  return H;
}

Mat4 cv_transition(double dt);

// Discretized white-noise-acceleration covariance; exact, so chaining steps
// composes: Q(a+b) = A(b) Q(a) A(b)' + Q(b).
Mat4 process_noise(double q, double dt);

KinematicState kf_predict(const KinematicState& s, double dt, double q);

// Joseph-form measurement update; throws FilterError if the innovation
// covariance is singular.
KinematicState kf_update(const KinematicState& s, const Measurement& m);

// Squared Mahalanobis distance of the measurement in innovation space.
double gate_distance2(const KinematicState& s, const Measurement& m);

// Fuses prior with any subset of {lidar, ais} as one Gaussian product in
// information form. With both absent this is the identity; with both present
// it equals the two sequential updates in either order.
KinematicState fuse_gaussian_product(const KinematicState& prior,
                                     const std::optional<Measurement>& lidar,
                                     const std::optional<Measurement>& ais);

struct GainWeights {
  Mat2 w_ais = Mat2::Zero();
  Mat2 w_lidar = Mat2::Zero();
};

// Complementary weights from the 2x2 position blocks of the two Kalman gains:
// W_ais = K_lidar (K_ais + K_lidar)^-1 and W_lidar = I - W_ais.
GainWeights gain_weighted_weights(const KinematicState& prior,
                                  const Measurement& lidar,
                                  const Measurement& ais);

// Literature-variant fusion: each source is applied as its own update, then
// the two posteriors are blended with the complementary gain weights (applied
// to the position and velocity blocks alike). Covariance is the blend of the
// per-source posteriors with the same weights.
KinematicState fuse_gain_weighted(const KinematicState& prior,
                                  const Measurement& lidar,
                                  const Measurement& ais);

// Open-loop CV prediction over a horizon; output[k] is the belief after k+1
// steps of dt. Position covariance grows strictly (q > 0).
std::vector<KinematicState> predict_horizon(const KinematicState& s, int steps,
                                            double dt, double q);

}  // namespace asv::tracking
