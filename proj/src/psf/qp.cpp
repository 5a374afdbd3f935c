#include "asv/psf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

namespace asv::psf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Givens rotation of two columns: (a, b) <- (c a + s b, -s a + c b).
inline void rotate_cols(MatX& M, int ja, int jb, double c, double s) {
  const int rows = static_cast<int>(M.rows());
  for (int k = 0; k < rows; ++k) {
    const double t1 = M(k, ja), t2 = M(k, jb);
    M(k, ja) = c * t1 + s * t2;
    M(k, jb) = -s * t1 + c * t2;
  }
}

}  // namespace

QpResult solve_qp(const MatX& G, const VecX& g0, const MatX& CE,
                  const VecX& ce0, const MatX& CI, const VecX& ci0) {
  const int n = static_cast<int>(G.rows());
  const int p = static_cast<int>(CE.cols());
  const int m = static_cast<int>(CI.cols());

  QpResult res;
  res.lambda = VecX::Zero(m);

  Eigen::LLT<MatX> llt(G);
  if (llt.info() != Eigen::Success) {
    res.status = QpResult::Status::kDegenerate;
    return res;
  }

  // J = L^-T: the basis in which active-constraint normals are orthonormal.
  MatX J = MatX::Identity(n, n);
  llt.matrixL().transpose().solveInPlace(J);
  MatX R = MatX::Zero(n, n);
  double R_norm = 1.0;

  VecX x = -llt.solve(g0);  // unconstrained minimizer
  VecX d(n), z(n), r(n), u(n + 1), np(n);
  std::vector<int> A(n + 1, -1);     // active constraint ids (eq as -(i+1))
  std::vector<char> active(m, 0);
  int iq = 0;

  const double tol_feas = 1e-10 * (1.0 + (m > 0 ? ci0.cwiseAbs().maxCoeff() : 0.0));
  const int max_pivots = 20 * (n + m + p) + 100;
  int pivots = 0;
  const bool trace = std::getenv("ASV_QP_TRACE") != nullptr;
  std::vector<int> add_count, drop_count;
  if (trace) {
    add_count.assign(m, 0);
    drop_count.assign(m, 0);
  }

  auto compute_steps = [&](const VecX& normal) {
    d.noalias() = J.transpose() * normal;
    z.setZero();
    if (iq < n) z.noalias() = J.rightCols(n - iq) * d.tail(n - iq);
    r.head(iq).setZero();
    if (iq > 0) {
      r.head(iq) = d.head(iq);
      R.topLeftCorner(iq, iq)
          .triangularView<Eigen::Upper>()
          .solveInPlace(r.head(iq));
    }
  };

  // Rotate trailing components of d to zero, then append it as R's new column.
  auto add_constraint = [&]() -> bool {
    for (int j = n - 1; j >= iq + 1; --j) {
      const double h = std::hypot(d(j - 1), d(j));
      if (h == 0.0) continue;
      const double c = d(j - 1) / h, s = d(j) / h;
      d(j - 1) = h;
      d(j) = 0.0;
      rotate_cols(J, j - 1, j, c, s);
    }
    ++iq;
    R.col(iq - 1).head(iq) = d.head(iq);
    R_norm = std::max(R_norm, std::abs(d(iq - 1)));
    return std::abs(d(iq - 1)) > 1e-13 * R_norm;
  };

  // Remove active constraint at position l (inequalities only), restoring the
  // triangularity of R and the J basis.
  auto delete_constraint = [&](int l) {
    if (trace && A[l] >= 0) ++drop_count[A[l]];
    if (A[l] >= 0) active[A[l]] = 0;
    for (int j = l; j < iq - 1; ++j) {
      A[j] = A[j + 1];
      u(j) = u(j + 1);
      R.col(j) = R.col(j + 1);
    }
    u(iq - 1) = u(iq);
    A[iq - 1] = -1;
    --iq;
    for (int j = l; j < iq; ++j) {
      const double h = std::hypot(R(j, j), R(j + 1, j));
      if (h == 0.0) continue;
      const double c = R(j, j) / h, s = R(j + 1, j) / h;
      for (int k = j; k < iq; ++k) {
        const double t1 = R(j, k), t2 = R(j + 1, k);
        R(j, k) = c * t1 + s * t2;
        R(j + 1, k) = -s * t1 + c * t2;
      }
      rotate_cols(J, j, j + 1, c, s);
    }
  };

  // A normal is numerically dependent on the active set when virtually all of
  // d = J^T np lives in the active rows; comparing the tail mass against the
  // whole vector keeps the test scale-free.
  auto step_denominator = [&](const VecX& normal) {
    const double zTnp = z.dot(normal);
    return zTnp > 1e-14 * d.squaredNorm() ? zTnp : 0.0;
  };

  // Equality constraints go in first and are never dropped.
  for (int i = 0; i < p; ++i) {
    np = CE.col(i);
    compute_steps(np);
    const double resid = np.dot(x) + ce0(i);
    const double zTnp = step_denominator(np);
    double t2 = 0.0;
    if (zTnp > 0.0) {
      t2 = -resid / zTnp;
    } else if (std::abs(resid) > 1e-9) {
      res.status = QpResult::Status::kInfeasible;  // inconsistent equalities
      return res;
    }
    x += t2 * z;
    u.head(iq) -= t2 * r.head(iq);
    u(iq) = t2;
    if (!add_constraint()) {
      res.status = QpResult::Status::kDegenerate;
      return res;
    }
    A[iq - 1] = -(i + 1);
  }

  VecX svec(m);
  while (true) {
    if (++pivots > max_pivots || !x.allFinite()) {
      res.status = QpResult::Status::kDegenerate;
      return res;
    }

    // Most violated inactive inequality.
    if (m > 0) {
      svec.noalias() = CI.transpose() * x;
      svec += ci0;
    }
    int ip = -1;
    double ss = -tol_feas;
    for (int i = 0; i < m; ++i) {
      if (active[i]) continue;
      if (svec(i) < ss) {
        ss = svec(i);
        ip = i;
      }
    }
    if (ip < 0) break;  // feasible and dual-optimal

    double s_ip = ss;
    np = CI.col(ip);
    u(iq) = 0.0;

    while (true) {
      if (++pivots > max_pivots) {
        res.status = QpResult::Status::kDegenerate;
        return res;
      }
      compute_steps(np);

      // Dual step bound: first active inequality whose multiplier hits zero.
      double t1 = kInf;
      int l = -1;
      for (int k = p; k < iq; ++k) {
        if (r(k) > 0.0 && u(k) / r(k) < t1) {
          t1 = u(k) / r(k);
          l = k;
        }
      }
      const double zTnp = step_denominator(np);  // equals |d_tail|^2 >= 0
      const double t2 = zTnp > 0.0 ? -s_ip / zTnp : kInf;
      const double t = std::min(t1, t2);

      if (t >= kInf) {
        res.status = QpResult::Status::kInfeasible;
        return res;
      }

      if (t2 >= kInf) {
        // Pure dual step: drop the blocking constraint and try again.
        u.head(iq) -= t * r.head(iq);
        u(iq) += t;
        delete_constraint(l);
        continue;
      }

      x += t * z;
      u.head(iq) -= t * r.head(iq);
      u(iq) += t;

      if (t == t2) {
        if (!add_constraint()) {
          // Numerically dependent at full step; drop a blocker if one exists.
          --iq;  // undo the count bump from the failed add
          if (l >= 0) {
            delete_constraint(l);
            s_ip = np.dot(x) + ci0(ip);
            continue;
          }
          res.status = QpResult::Status::kDegenerate;
          return res;
        }
        A[iq - 1] = ip;
        active[ip] = 1;
        if (trace) ++add_count[ip];
        break;  // back to the violation scan
      }

      // Partial step: multiplier of constraint l reached zero first.
      delete_constraint(l);
      s_ip = np.dot(x) + ci0(ip);
      if (s_ip >= -tol_feas) break;  // became feasible along the way
    }
  }

  if (trace && pivots > 2000) {
    std::fprintf(stderr, "[qp] piv=%d iq=%d n=%d m=%d; top re-added rows:\n",
                 pivots, iq, n, m);
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return add_count[a] > add_count[b]; });
    for (int t = 0; t < 12 && t < m; ++t)
      std::fprintf(stderr, "  row %d: add=%d drop=%d ci0=%.6g nrm=%.3g\n",
                   idx[t], add_count[idx[t]], drop_count[idx[t]],
                   ci0(idx[t]), CI.col(idx[t]).norm());
  }
  for (int k = p; k < iq; ++k)
    if (A[k] >= 0) res.lambda(A[k]) = u(k);
  res.x = x;
  res.objective = 0.5 * x.dot(G * x) + g0.dot(x);
  res.iterations = pivots;
  res.status = QpResult::Status::kOptimal;
  return res;
}

}  // namespace asv::psf
