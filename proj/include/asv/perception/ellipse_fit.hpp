#pragma once

#include <array>
#include <complex>
#include <stdexcept>

#include "asv/perception/lidar.hpp"
#include "asv/tracking/measurement.hpp"

namespace asv::perception {

struct FitError : std::runtime_error {
  enum class Code { kTooFewPoints, kDegenerate, kNotAnEllipse };
  FitError(Code c, const char* msg) : std::runtime_error(msg), code(c) {}
  Code code;
};

// Conic ax^2 + bxy + cy^2 + dx + ey + f = 0 with 4ac - b^2 = 1, plus the
// derived geometric form. lambda and the reduced eigenvalues are kept for
// diagnostics: lambda equals the squared algebraic residual ||D a||^2.
struct EllipseParams {
  std::array<double, 6> coeffs{};  // a, b, c, d, e, f
  Vec2 center = Vec2::Zero();
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double phi = 0.0;  // major-axis direction, in (-pi/2, pi/2]

  double lambda = 0.0;    // generalized eigenvalue of the accepted solution
  double fit_rms = 0.0;   // RMS gradient-normalized point distance [m]
  int n_points = 0;
  // All three eigenvalues of the reduced 3x3 problem (NaN for the baseline
  // fitter, which has no eigenproblem).
  std::array<std::complex<double>, 3> reduced_eigs{};

  double eval_conic(const Vec2& p) const {
    const auto& k = coeffs;
    return k[0] * p.x() * p.x() + k[1] * p.x() * p.y() + k[2] * p.y() * p.y() +
           k[3] * p.x() + k[4] * p.y() + k[5];
  }
};

// Direct least-squares conic fit constrained to ellipses (4ac - b^2 = 1),
// solved through the 3x3 block reduction of the generalized eigenproblem so
// only the nonsingular scatter block is inverted. Needs >= 6 points; throws
// FitError on degenerate input. Always returns an ellipse.
EllipseParams fit_ellipse_stable(const PointCluster& cluster);

// Baseline: ordinary least squares on the conic with f pinned to -1. May
// return hyperbolas on noisy arcs, in which case it throws kNotAnEllipse.
EllipseParams fit_ellipse_mlr(const PointCluster& cluster);

// Ellipse center as a position measurement. Covariance is the base value
// inflated by the squared residual ratio once the RMS exceeds rms_ref:
// R = base * max(1, (fit_rms/rms_ref)^2).
tracking::Measurement ellipse_to_measurement(const EllipseParams& e, double t,
                                             double base_var = 1.0,
                                             double rms_ref = 0.3);

}  // namespace asv::perception
