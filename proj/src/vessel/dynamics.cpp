#include "asv/vessel/dynamics.hpp"

#include <cmath>

#include "asv/core/angles.hpp"

namespace asv::vessel {

void VesselParams::validate() const {
  if (!M.allFinite()) throw ModelError("vessel params: M has non-finite entries");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw ModelError("vessel params: M is not symmetric");
  Eigen::LLT<Mat3> llt(M);
  if (llt.info() != Eigen::Success)
    throw ModelError("vessel params: M is not positive definite");
  if ((d_lin.array() < 0.0).any() || (d_quad.array() < 0.0).any())
    throw ModelError("vessel params: damping coefficients must be >= 0");
  if (((tau_ub - tau_lb).array() <= 0.0).any())
    throw ModelError("vessel params: empty input box");
  if (dt <= 0.0) throw ModelError("vessel params: dt must be > 0");
}

Mat3 rotation_matrix(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Mat3 R;
  R << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  return R;
}

Mat3 coriolis(const VesselParams& p, const Vec3& nu) {
  // Standard 3-DOF parameterization from the mass matrix; c13/c23 chosen so
  // C is skew-symmetric and vanishes at nu = 0.
  const double m11 = p.M(0, 0), m22 = p.M(1, 1), m23 = p.M(1, 2);
  const double c13 = -(m22 * nu(1) + m23 * nu(2));
  const double c23 = m11 * nu(0);
  Mat3 C;
  C << 0.0, 0.0, c13,
       0.0, 0.0, c23,
       -c13, -c23, 0.0;
  return C;
}

Mat3 damping(const VesselParams& p, const Vec3& nu) {
  Mat3 D = p.d_lin.asDiagonal();
  D(0, 0) += p.d_quad(0) * std::abs(nu(0));
  D(1, 1) += p.d_quad(1) * std::abs(nu(1));
  D(2, 2) += p.d_quad(2) * std::abs(nu(2));
  return D;
}

Vec6 derivative(const VesselParams& p, const Vec6& x, const Vec3& tau,
                const Vec3& tau_d) {
  const Vec3 nu = x.tail<3>();
  Vec6 dx;
  dx.head<3>() = rotation_matrix(x(2)) * nu;
  const Vec3 force = tau + tau_d - coriolis(p, nu) * nu - damping(p, nu) * nu;
  dx.tail<3>() = p.M.llt().solve(force);
  return dx;
}

Vec6 step_rk4_raw(const VesselParams& p, const Vec6& x, const Vec3& tau,
                  const Vec3& tau_d, double dt) {
  const Vec6 k1 = derivative(p, x, tau, tau_d);
  const Vec6 k2 = derivative(p, x + 0.5 * dt * k1, tau, tau_d);
  const Vec6 k3 = derivative(p, x + 0.5 * dt * k2, tau, tau_d);
  const Vec6 k4 = derivative(p, x + dt * k3, tau, tau_d);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

VesselState step_rk4(const VesselParams& p, const VesselState& s,
                     const ControlInput& tau, const Disturbance& tau_d,
                     double dt) {
  if (dt <= 0.0) throw IntegrationError("step_rk4: dt must be > 0");
  Vec6 z = s.to_vector();
  if (!z.allFinite() || !tau.to_vector().allFinite())
    throw IntegrationError("step_rk4: non-finite state or input");
  z = step_rk4_raw(p, z, tau.to_vector(), tau_d.to_vector(), dt);
  if (!z.allFinite()) throw IntegrationError("step_rk4: integration diverged");
  z(2) = wrap_angle(z(2));
  return VesselState::from_vector(z, s.t + dt);
}

namespace {

// d(C(nu) nu)/dnu, worked out per component.
Mat3 coriolis_term_jacobian(const VesselParams& p, const Vec3& nu) {
  const double m11 = p.M(0, 0), m22 = p.M(1, 1), m23 = p.M(1, 2);
  const double u = nu(0), v = nu(1), r = nu(2);
  Mat3 J;
  J << 0.0, -m22 * r, -m22 * v - 2.0 * m23 * r,
       m11 * r, 0.0, m11 * u,
       (m22 - m11) * v + m23 * r, (m22 - m11) * u, m23 * u;
  return J;
}

// d(D(nu) nu)/dnu. |x|x has derivative 2|x| everywhere.
Mat3 damping_term_jacobian(const VesselParams& p, const Vec3& nu) {
  Mat3 J = p.d_lin.asDiagonal();
  J(0, 0) += 2.0 * p.d_quad(0) * std::abs(nu(0));
  J(1, 1) += 2.0 * p.d_quad(1) * std::abs(nu(1));
  J(2, 2) += 2.0 * p.d_quad(2) * std::abs(nu(2));
  return J;
}

}  // namespace

void linearize(const VesselParams& p, const Vec6& x, const Vec3& tau,
               const Vec3& tau_d, Mat6& A, Mat63& B) {
  (void)tau;
  (void)tau_d;  // dynamics are affine in the forces
  const Vec3 nu = x.tail<3>();
  const double c = std::cos(x(2)), s = std::sin(x(2));

  A.setZero();
  // d(R nu)/dpsi
  A(0, 2) = -s * nu(0) - c * nu(1);
  A(1, 2) = c * nu(0) - s * nu(1);
  // d(R nu)/dnu
  A.block<3, 3>(0, 3) = rotation_matrix(x(2));
  // velocity block
  const Mat3 Minv = p.M.llt().solve(Mat3::Identity());
  A.block<3, 3>(3, 3) =
      -Minv * (coriolis_term_jacobian(p, nu) + damping_term_jacobian(p, nu));

  B.setZero();
  B.block<3, 3>(3, 0) = Minv;
}

void step_rk4_jacobians(const VesselParams& p, const Vec6& x, const Vec3& tau,
                        const Vec3& tau_d, double dt, Mat6& Ad, Mat63& Bd) {
  // Chain rule through the four stages; dk_i are the stage sensitivities.
  Mat6 A1, A2, A3, A4;
  Mat63 B;
  const Vec6 k1 = derivative(p, x, tau, tau_d);
  linearize(p, x, tau, tau_d, A1, B);
  const Vec6 x2 = x + 0.5 * dt * k1;
  const Vec6 k2 = derivative(p, x2, tau, tau_d);
  linearize(p, x2, tau, tau_d, A2, B);
  const Vec6 x3 = x + 0.5 * dt * k2;
  const Vec6 k3 = derivative(p, x3, tau, tau_d);
  linearize(p, x3, tau, tau_d, A3, B);
  const Vec6 x4 = x + dt * k3;
  linearize(p, x4, tau, tau_d, A4, B);

  const Mat6 I = Mat6::Identity();
  const Mat6 dk1 = A1;
  const Mat6 dk2 = A2 * (I + 0.5 * dt * dk1);
  const Mat6 dk3 = A3 * (I + 0.5 * dt * dk2);
  const Mat6 dk4 = A4 * (I + dt * dk3);
  Ad = I + (dt / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);

  // Input sensitivities: dk1/du = B, dk2/du = A2*(dt/2 dk1u) + B, ...
  const Mat63 dk1u = B;
  const Mat63 dk2u = A2 * (0.5 * dt * dk1u) + B;
  const Mat63 dk3u = A3 * (0.5 * dt * dk2u) + B;
  const Mat63 dk4u = A4 * (dt * dk3u) + B;
  Bd = (dt / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
}

}  // namespace asv::vessel
