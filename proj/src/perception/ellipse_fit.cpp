#include "asv/perception/ellipse_fit.hpp"

#include <cmath>

#include "asv/core/angles.hpp"

namespace asv::perception {

namespace {

// Shared tail: fill the geometric form from normalized conic coefficients,
// compute residual stats, and sanity-check that the conic is a real ellipse.
void finish_params(EllipseParams& out, const PointCluster& cluster) {
  double a = out.coeffs[0], b = out.coeffs[1], c = out.coeffs[2];
  double d = out.coeffs[3], e = out.coeffs[4], f = out.coeffs[5];

  // Orient so the quadratic form is positive definite (4ac - b^2 > 0 already
  // guarantees a and c share a sign).
  if (a < 0.0) {
    for (auto& k : out.coeffs) k = -k;
    a = out.coeffs[0]; b = out.coeffs[1]; c = out.coeffs[2];
    d = out.coeffs[3]; e = out.coeffs[4]; f = out.coeffs[5];
  }

  // Center solves grad F = 0.
  Mat2 G;
  G << 2.0 * a, b, b, 2.0 * c;
  const Vec2 ctr = G.inverse() * Vec2(-d, -e);
  out.center = ctr;

  const double f0 = a * ctr.x() * ctr.x() + b * ctr.x() * ctr.y() +
                    c * ctr.y() * ctr.y() + d * ctr.x() + e * ctr.y() + f;
  if (f0 >= 0.0)
    throw FitError(FitError::Code::kDegenerate,
                   "conic has no real ellipse locus");

  Mat2 Q;
  Q << a, 0.5 * b, 0.5 * b, c;
  Eigen::SelfAdjointEigenSolver<Mat2> es(Q);
  const Vec2 ev = es.eigenvalues();  // ascending, both > 0 here
  if (ev(0) <= 0.0)
    throw FitError(FitError::Code::kDegenerate, "quadratic form not definite");

  // Smaller eigenvalue -> longer axis.
  out.semi_major = std::sqrt(-f0 / ev(0));
  out.semi_minor = std::sqrt(-f0 / ev(1));
  const Vec2 dir = es.eigenvectors().col(0);
  double phi = std::atan2(dir.y(), dir.x());
  // Fold to (-pi/2, pi/2] — an axis direction, not a heading.
  if (phi > 0.5 * M_PI) phi -= M_PI;
  if (phi <= -0.5 * M_PI) phi += M_PI;
  out.phi = phi;

  double acc = 0.0;
  for (const auto& p : cluster.points) {
    const double F = out.eval_conic(p);
    const double gx = 2.0 * a * p.x() + b * p.y() + d;
    const double gy = b * p.x() + 2.0 * c * p.y() + e;
    const double g = std::hypot(gx, gy);
    const double dist = g > 1e-12 ? std::abs(F) / g : 0.0;
    acc += dist * dist;
  }
  out.fit_rms = std::sqrt(acc / cluster.points.size());
  out.n_points = static_cast<int>(cluster.points.size());
}

}  // namespace

EllipseParams fit_ellipse_stable(const PointCluster& cluster) {
  const int n = static_cast<int>(cluster.points.size());
  if (n < 6)
    throw FitError(FitError::Code::kTooFewPoints,
                   "ellipse fit needs at least 6 points");

  // Work in centroid-centered coordinates for conditioning; the constraint
  // 4ac - b^2 = 1 is translation invariant so the shift is undone exactly.
  Vec2 mu = Vec2::Zero();
  for (const auto& p : cluster.points) mu += p;
  mu /= n;

  MatX D1(n, 3), D2(n, 3);
  for (int i = 0; i < n; ++i) {
    const Vec2 q = cluster.points[i] - mu;
    D1(i, 0) = q.x() * q.x();
    D1(i, 1) = q.x() * q.y();
    D1(i, 2) = q.y() * q.y();
    D2(i, 0) = q.x();
    D2(i, 1) = q.y();
    D2(i, 2) = 1.0;
  }
  const Mat3 S1 = D1.transpose() * D1;
  const Mat3 S2 = D1.transpose() * D2;
  const Mat3 S3 = D2.transpose() * D2;

  // Only the linear-block scatter is inverted; it is singular exactly when
  // the points are collinear (or otherwise carry no affine spread).
  Eigen::FullPivLU<Mat3> lu(S3);
  if (!lu.isInvertible())
    throw FitError(FitError::Code::kDegenerate,
                   "degenerate point configuration (collinear cluster)");
  const Mat3 T = -lu.solve(S2.transpose());
  const Mat3 Mred = S1 + S2 * T;

  // Premultiply by the inverse of the 3x3 constraint block.
  Mat3 Msys;
  Msys.row(0) = 0.5 * Mred.row(2);
  Msys.row(1) = -Mred.row(1);
  Msys.row(2) = 0.5 * Mred.row(0);

  Eigen::EigenSolver<Mat3> es(Msys);
  if (es.info() != Eigen::Success)
    throw FitError(FitError::Code::kDegenerate, "eigensolver failed");

  int pick = -1;
  double pick_cond = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3 v = es.eigenvectors().col(i).real();
    const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
    // The ellipse solution is the unique eigenvector with a'C1a > 0.
    if (cond > 0.0 && (pick < 0 || cond > pick_cond)) {
      pick = i;
      pick_cond = cond;
    }
  }
  if (pick < 0)
    throw FitError(FitError::Code::kDegenerate,
                   "no elliptical solution in eigenvector set");

  Vec3 a1 = es.eigenvectors().col(pick).real();
  a1 /= std::sqrt(pick_cond);  // enforce a'Ca = 1
  const Vec3 a2 = T * a1;

  EllipseParams out;
  const double a = a1(0), b = a1(1), c = a1(2);
  const double dd = a2(0), ee = a2(1), ff = a2(2);
  // Undo the centroid shift.
  out.coeffs = {a,
                b,
                c,
                dd - 2.0 * a * mu.x() - b * mu.y(),
                ee - b * mu.x() - 2.0 * c * mu.y(),
                ff + a * mu.x() * mu.x() + b * mu.x() * mu.y() +
                    c * mu.y() * mu.y() - dd * mu.x() - ee * mu.y()};
  out.lambda = es.eigenvalues()(pick).real();
  for (int i = 0; i < 3; ++i) out.reduced_eigs[i] = es.eigenvalues()(i);

  finish_params(out, cluster);
  return out;
}

EllipseParams fit_ellipse_mlr(const PointCluster& cluster) {
  const int n = static_cast<int>(cluster.points.size());
  if (n < 6)
    throw FitError(FitError::Code::kTooFewPoints,
                   "ellipse fit needs at least 6 points");

  // Plain OLS with the constant pinned: ax^2 + bxy + cy^2 + dx + ey = 1.
  MatX A(n, 5);
  VecX rhs = VecX::Ones(n);
  for (int i = 0; i < n; ++i) {
    const Vec2& p = cluster.points[i];
    A(i, 0) = p.x() * p.x();
    A(i, 1) = p.x() * p.y();
    A(i, 2) = p.y() * p.y();
    A(i, 3) = p.x();
    A(i, 4) = p.y();
  }
  const Eigen::ColPivHouseholderQR<MatX> qr(A);
  if (qr.rank() < 5)
    throw FitError(FitError::Code::kDegenerate,
                   "degenerate point configuration");
  VecX sol = qr.solve(rhs);

  const double disc = 4.0 * sol(0) * sol(2) - sol(1) * sol(1);
  if (disc <= 0.0)
    throw FitError(FitError::Code::kNotAnEllipse,
                   "baseline fit produced a non-elliptical conic");

  EllipseParams out;
  const double scale = 1.0 / std::sqrt(disc);  // renormalize to 4ac - b^2 = 1
  out.coeffs = {sol(0) * scale, sol(1) * scale, sol(2) * scale,
                sol(3) * scale, sol(4) * scale, -scale};
  // Residual bookkeeping for parity with the stable fitter.
  double acc = 0.0;
  for (const auto& p : cluster.points) {
    const double F = out.eval_conic(p);
    acc += F * F;
  }
  out.lambda = acc;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.reduced_eigs = {std::complex<double>(nan, 0.0),
                      std::complex<double>(nan, 0.0),
                      std::complex<double>(nan, 0.0)};

  finish_params(out, cluster);
  return out;
}

tracking::Measurement ellipse_to_measurement(const EllipseParams& e, double t,
                                             double base_var, double rms_ref) {
  tracking::Measurement m;
  m.z = e.center;
  const double ratio = e.fit_rms / rms_ref;
  m.R = base_var * std::max(1.0, ratio * ratio) * Mat2::Identity();
  m.source = tracking::MeasurementSource::kLidar;
  m.t = t;
  return m;
}

}  // namespace asv::perception
