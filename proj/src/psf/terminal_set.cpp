#include "asv/psf/terminal_set.hpp"

#include <cmath>

#include "asv/core/rng.hpp"
#include "asv/vessel/dynamics.hpp"

namespace asv::psf {

namespace {

// One velocity-only step of the full nonlinear model (pose does not feed back
// into nu, so zeroing it loses nothing).
Vec3 step_velocity(const vessel::VesselParams& p, const Vec3& nu,
                   const Vec3& tau, double dt) {
  Vec6 x = Vec6::Zero();
  x.tail<3>() = nu;
  return vessel::step_rk4_raw(p, x, tau, Vec3::Zero(), dt).tail<3>();
}

}  // namespace

TerminalSet build_terminal_set(const vessel::VesselParams& params, double dt,
                               const TerminalSetOptions& opt) {
  params.validate();

  // Discrete velocity subsystem at rest; the (3,3) velocity block of the RK4
  // Jacobian is self-contained.
  Mat6 Ad6;
  Mat63 Bd6;
  vessel::step_rk4_jacobians(params, Vec6::Zero(), Vec3::Zero(), Vec3::Zero(),
                             dt, Ad6, Bd6);
  const Mat3 A = Ad6.block<3, 3>(3, 3);
  const Mat3 B = Bd6.block<3, 3>(3, 0);

  const Mat3 Q = opt.q_lqr.asDiagonal();
  const Mat3 Rw = opt.r_lqr.asDiagonal();

  // Riccati fixed point for the LQR gain.
  Mat3 P = Q;
  Mat3 K = Mat3::Zero();
  for (int it = 0; it < 100000; ++it) {
    const Mat3 S = Rw + B.transpose() * P * B;
    K = S.llt().solve(B.transpose() * P * A);
    const Mat3 Pn =
        Q + A.transpose() * P * A - A.transpose() * P * B * K;
    const double diff = (Pn - P).cwiseAbs().maxCoeff();
    P = 0.5 * (Pn + Pn.transpose());
    if (diff < 1e-13 * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
  }

  const Mat3 Acl = A - B * K;
  if (Acl.eigenvalues().cwiseAbs().maxCoeff() >= 1.0 - 1e-9)
    throw TerminalSetError("closed-loop velocity dynamics not contractive");

  // Closed-loop Lyapunov equation P_raw - Acl' P_raw Acl = Q + K'RwK via the
  // 9x9 Kronecker system.
  const Mat3 Qcl = Q + K.transpose() * Rw * K;
  Eigen::Matrix<double, 9, 9> lhs =
      Eigen::Matrix<double, 9, 9>::Identity();
  const Mat3 AclT = Acl.transpose();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      lhs.block<3, 3>(3 * i, 3 * j) -= AclT(i, j) * AclT;  // I - Acl'(x)Acl'
  Eigen::Matrix<double, 9, 1> vecQ;
  for (int j = 0; j < 3; ++j) vecQ.segment<3>(3 * j) = Qcl.col(j);
  const Eigen::Matrix<double, 9, 1> vecP = lhs.fullPivLu().solve(vecQ);
  Mat3 P_raw;
  for (int j = 0; j < 3; ++j) P_raw.col(j) = vecP.segment<3>(3 * j);
  P_raw = 0.5 * (P_raw + P_raw.transpose()).eval();

  const Mat3 P_raw_inv = P_raw.llt().solve(Mat3::Identity());

  // Largest alpha such that every nu with nu'P_raw nu <= alpha satisfies the
  // input box under tau = -K nu and the velocity box. Support function of an
  // ellipsoid over a linear functional gives each bound in closed form.
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double tau_bound = std::min(-params.tau_lb(i), params.tau_ub(i));
    const Vec3 k_i = K.row(i).transpose();
    const double spread = k_i.dot(P_raw_inv * k_i);
    if (spread > 1e-15)
      alpha = std::min(alpha, tau_bound * tau_bound / spread);
  }
  for (int j = 0; j < 3; ++j) {
    const double v_bound = std::min(-params.x_lb(3 + j), params.x_ub(3 + j));
    if (!std::isfinite(v_bound)) continue;
    alpha = std::min(alpha, v_bound * v_bound / P_raw_inv(j, j));
  }
  if (!std::isfinite(alpha) || alpha <= 0.0)
    throw TerminalSetError("could not scale terminal set into the boxes");

  // Certification loop: sampled boundary rollouts of the nonlinear dynamics.
  TerminalSet out;
  for (int round = 0; round <= opt.max_shrinks; ++round) {
    const Mat3 Pf = P_raw / alpha;
    Rng rng(opt.cert_seed, "terminal-cert");
    bool ok = true;

    for (int s = 0; s < opt.cert_samples && ok; ++s) {
      Vec3 w(rng.normal(), rng.normal(), rng.normal());
      if (w.norm() < 1e-9) w = Vec3(1, 0, 0);
      Vec3 nu = w / std::sqrt(w.dot(Pf * w));  // on the boundary
      double level = 1.0;
      for (int k = 0; k < opt.cert_steps; ++k) {
        const Vec3 tau = -K * nu;
        if ((tau.array() < params.tau_lb.array() - 1e-9).any() ||
            (tau.array() > params.tau_ub.array() + 1e-9).any()) {
          ok = false;
          break;
        }
        nu = step_velocity(params, nu, tau, dt);
        const double next_level = nu.dot(Pf * nu);
        if (next_level > level + 1e-10 ||
            (nu.array() < params.x_lb.tail<3>().array() - 1e-9).any() ||
            (nu.array() > params.x_ub.tail<3>().array() + 1e-9).any()) {
          ok = false;
          break;
        }
        level = next_level;
      }
    }

    if (ok) {
      out.P = Pf;
      out.K = K;
      out.alpha = alpha;
      out.dt = dt;
      out.certified_samples = opt.cert_samples;
      out.shrink_rounds = round;
      return out;
    }
    alpha *= opt.shrink;
  }
  throw TerminalSetError(
      "terminal set certification failed after max shrink rounds");
}

}  // namespace asv::psf
