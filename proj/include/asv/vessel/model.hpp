#pragma once

#include <stdexcept>

#include "asv/core/types.hpp"

namespace asv::vessel {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Planar pose + body-frame velocities. Heading psi is measured from +x toward
// +y and kept in (-pi, pi] by the public integrator.
struct VesselState {
  double x = 0.0;    // position [m]
  double y = 0.0;    // position [m]
  double psi = 0.0;  // heading [rad]
  double u = 0.0;    // surge velocity [m/s]
  double v = 0.0;    // sway velocity [m/s]
  double r = 0.0;    // yaw rate [rad/s]
  double t = 0.0;    // timestamp [s]

  Vec6 to_vector() const {
    Vec6 z;
    z << x, y, psi, u, v, r;
    return z;
  }

  static VesselState from_vector(const Vec6& z, double time) {
    return {z(0), z(1), z(2), z(3), z(4), z(5), time};
  }
};

// Generalized force in body frame: surge force, sway force, yaw moment.
struct ControlInput {
  double tau_u = 0.0;  // [N]
  double tau_v = 0.0;  // [N]
  double tau_r = 0.0;  // [N m]

  Vec3 to_vector() const { return Vec3(tau_u, tau_v, tau_r); }
  static ControlInput from_vector(const Vec3& z) { return {z(0), z(1), z(2)}; }
};

// Slowly varying environmental force, expressed in body frame.
struct Disturbance {
  double tau_u = 0.0;
  double tau_v = 0.0;
  double tau_r = 0.0;

  Vec3 to_vector() const { return Vec3(tau_u, tau_v, tau_r); }
};

// Rigid-body + added mass matrix, linear and quadratic damping, and the box
// bounds used by the safety filter. Defaults are a ~25 kg model-scale hull.
struct VesselParams {
  Mat3 M = (Mat3() << 25.0, 0.0, 0.0,
                       0.0, 33.0, 1.0,
                       0.0,  1.0, 2.8).finished();
  Vec3 d_lin = Vec3(2.0, 7.0, 0.5);    // linear damping diagonal
  Vec3 d_quad = Vec3(1.0, 3.0, 0.2);   // quadratic damping coefficients

  Vec3 tau_lb = Vec3(-6.0, -4.0, -3.0);
  Vec3 tau_ub = Vec3(6.0, 4.0, 3.0);

  // State box: positions and heading unbounded by default (infinities are
  // treated as "no constraint" everywhere downstream).
  Vec6 x_lb = (Vec6() << -INFINITY, -INFINITY, -INFINITY, -1.8, -1.5, -1.2).finished();
  Vec6 x_ub = (Vec6() << INFINITY, INFINITY, INFINITY, 1.8, 1.5, 1.2).finished();

  double dt = 0.1;  // default integration step [s]

  // Throws ModelError if M is not symmetric positive definite or damping
  // coefficients are negative.
  void validate() const;
};

}  // namespace asv::vessel
