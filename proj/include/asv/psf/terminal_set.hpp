#pragma once

#include <stdexcept>

#include "asv/vessel/model.hpp"

namespace asv::psf {

struct TerminalSetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TerminalSetOptions {
  Vec3 q_lqr = Vec3(0.2, 1.0, 2.0);   // state weights on (u, v, r)
  Vec3 r_lqr = Vec3(0.1, 0.1, 0.1);
  int cert_samples = 1000;
  int cert_steps = 50;
  double shrink = 0.8;    // alpha reduction per failed certification round
  int max_shrinks = 40;
  std::uint64_t cert_seed = 1234;
};

// Velocity-space invariant ellipsoid {nu : nu' P nu <= 1} with a stabilizing
// feedback tau = -K nu that respects the input box inside it. P comes from
// the closed-loop discrete Lyapunov equation of the RK4-discretized velocity
// subsystem, scaled to the largest level set that fits the input and velocity
// boxes, then certified on sampled boundary rollouts of the full nonlinear
// dynamics (level non-increasing over cert_steps). Shrinks and retries if a
// rollout breaks monotonicity.
struct TerminalSet {
  Mat3 P = Mat3::Identity();
  Mat3 K = Mat3::Zero();
  double alpha = 0.0;        // applied level scaling (diagnostics)
  double dt = 0.0;           // rate the set was designed and certified at
  int certified_samples = 0;
  int shrink_rounds = 0;

  double level(const Vec3& nu) const { return nu.dot(P * nu); }
};

TerminalSet build_terminal_set(const vessel::VesselParams& params, double dt,
                               const TerminalSetOptions& opt = {});

}  // namespace asv::psf
