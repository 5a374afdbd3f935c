#pragma once

#include "asv/vessel/model.hpp"

namespace asv::vessel {

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Planar rotation from body to world frame, the 3x3 variant acting on
// [u, v, r] (yaw rate passes through).
Mat3 rotation_matrix(double psi);

// Coriolis/centripetal matrix built from M. Skew-symmetric for every nu and
// zero at rest.
Mat3 coriolis(const VesselParams& p, const Vec3& nu);

// Total damping D_L + D_Q(nu); positive semidefinite for every nu.
Mat3 damping(const VesselParams& p, const Vec3& nu);

// Continuous-time state derivative of the stacked state [x y psi u v r].
Vec6 derivative(const VesselParams& p, const Vec6& x, const Vec3& tau,
                const Vec3& tau_d);

// One RK4 step on the raw 6-vector. No heading wrap — callers that need a
// continuous heading (the OCP solver) use this directly.
Vec6 step_rk4_raw(const VesselParams& p, const Vec6& x, const Vec3& tau,
                  const Vec3& tau_d, double dt);

// One RK4 step on the typed state; wraps psi to (-pi, pi], advances t, and
// throws IntegrationError if the result is non-finite.
VesselState step_rk4(const VesselParams& p, const VesselState& s,
                     const ControlInput& tau, const Disturbance& tau_d,
                     double dt);

// Continuous-time Jacobians A = df/dx (6x6) and B = df/dtau (6x3) at (x, tau).
// B is state independent: [0; M^-1].
void linearize(const VesselParams& p, const Vec6& x, const Vec3& tau,
               const Vec3& tau_d, Mat6& A, Mat63& B);

// Exact Jacobians of step_rk4_raw via chain rule through the four stages.
void step_rk4_jacobians(const VesselParams& p, const Vec6& x, const Vec3& tau,
                        const Vec3& tau_d, double dt, Mat6& Ad, Mat63& Bd);

}  // namespace asv::vessel
