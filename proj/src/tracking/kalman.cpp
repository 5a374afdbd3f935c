#include "asv/tracking/kalman.hpp"

namespace asv::tracking {

Mat4 cv_transition(double dt) {
  Mat4 A = Mat4::Identity();
  A(0, 2) = dt;
  A(1, 3) = dt;
  return A;
}

Mat4 process_noise(double q, double dt) {
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  Mat4 Q;
  Q << dt3 / 3.0, 0.0, dt2 / 2.0, 0.0,
       0.0, dt3 / 3.0, 0.0, dt2 / 2.0,
       dt2 / 2.0, 0.0, dt, 0.0,
       0.0, dt2 / 2.0, 0.0, dt;
  return q * Q;
}

KinematicState kf_predict(const KinematicState& s, double dt, double q) {
  const Mat4 A = cv_transition(dt);
  KinematicState out;
  out.x = A * s.x;
  out.P = A * s.P * A.transpose() + process_noise(q, dt);
  out.t = s.t + dt;
  return out;
}

KinematicState kf_update(const KinematicState& s, const Measurement& m) {
  const auto H = obs_matrix();
  const Vec2 innov = m.z - H * s.x;
  const Mat2 S = H * s.P * H.transpose() + m.R;
  // R is PD in every caller, but guard anyway: a singular S means the gain
  // is undefined.
  Eigen::FullPivLU<Mat2> lu(S);
  if (!lu.isInvertible())
    throw FilterError("kf_update: singular innovation covariance");
  const Eigen::Matrix<double, 4, 2> K = s.P * H.transpose() * lu.inverse();

  KinematicState out;
  out.x = s.x + K * innov;
  const Mat4 IKH = Mat4::Identity() - K * H;
  out.P = IKH * s.P * IKH.transpose() + K * m.R * K.transpose();
  out.t = s.t;
  return out;
}

double gate_distance2(const KinematicState& s, const Measurement& m) {
  const auto H = obs_matrix();
  const Vec2 innov = m.z - H * s.x;
  const Mat2 S = H * s.P * H.transpose() + m.R;
  return innov.dot(S.inverse() * innov);
}

KinematicState fuse_gaussian_product(const KinematicState& prior,
                                     const std::optional<Measurement>& lidar,
                                     const std::optional<Measurement>& ais) {
  if (!lidar && !ais) return prior;

  // Product of Gaussians = precision addition in information space.
  const auto H = obs_matrix();
  const Mat4 P_inv = prior.P.inverse();
  Mat4 info = P_inv;
  Vec4 info_vec = P_inv * prior.x;
  for (const auto* m : {lidar ? &*lidar : nullptr, ais ? &*ais : nullptr}) {
    if (!m) continue;
    const Mat2 R_inv = m->R.inverse();
    info += H.transpose() * R_inv * H;
    info_vec += H.transpose() * R_inv * m->z;
  }

  KinematicState out;
  out.P = info.inverse();
  out.P = 0.5 * (out.P + out.P.transpose());  // keep symmetric
  out.x = out.P * info_vec;
  out.t = prior.t;
  return out;
}

GainWeights gain_weighted_weights(const KinematicState& prior,
                                  const Measurement& lidar,
                                  const Measurement& ais) {
  const auto H = obs_matrix();
  auto gain_pos = [&](const Measurement& m) -> Mat2 {
    const Mat2 S = H * prior.P * H.transpose() + m.R;
    const Eigen::Matrix<double, 4, 2> K = prior.P * H.transpose() * S.inverse();
    return K.topRows<2>();
  };
  const Mat2 K_l = gain_pos(lidar);
  const Mat2 K_a = gain_pos(ais);
  Eigen::FullPivLU<Mat2> lu(K_a + K_l);
  if (!lu.isInvertible())
    throw FilterError("fuse_gain_weighted: singular gain sum");
  GainWeights w;
  w.w_ais = K_l * lu.inverse();
  w.w_lidar = Mat2::Identity() - w.w_ais;
  return w;
}

KinematicState fuse_gain_weighted(const KinematicState& prior,
                                  const Measurement& lidar,
                                  const Measurement& ais) {
  const GainWeights w = gain_weighted_weights(prior, lidar, ais);
  const KinematicState post_l = kf_update(prior, lidar);
  const KinematicState post_a = kf_update(prior, ais);

  Mat4 Wa = Mat4::Zero(), Wl = Mat4::Zero();
  Wa.block<2, 2>(0, 0) = w.w_ais;
  Wa.block<2, 2>(2, 2) = w.w_ais;
  Wl.block<2, 2>(0, 0) = w.w_lidar;
  Wl.block<2, 2>(2, 2) = w.w_lidar;

  KinematicState out;
  out.x = Wa * post_a.x + Wl * post_l.x;
  out.P = Wa * post_a.P * Wa.transpose() + Wl * post_l.P * Wl.transpose();
  out.t = prior.t;
  return out;
}

std::vector<KinematicState> predict_horizon(const KinematicState& s, int steps,
                                            double dt, double q) {
  std::vector<KinematicState> out;
  out.reserve(steps);
  KinematicState cur = s;
  for (int k = 0; k < steps; ++k) {
    cur = kf_predict(cur, dt, q);
    out.push_back(cur);
  }
  return out;
}

}  // namespace asv::tracking
