#include "asv/psf/stage_qp.hpp"

#include <algorithm>
#include <cmath>

namespace asv::psf {

namespace {

// Largest step in [0, 1] keeping every positive variable at or above
// (1 - tau) of its current value.
double step_length(const std::vector<VecX>& val, const std::vector<VecX>& dir,
                   double tau) {
  double a = 1.0;
  for (std::size_t k = 0; k < val.size(); ++k)
    for (int i = 0; i < val[k].size(); ++i)
      if (dir[k](i) < 0.0) a = std::min(a, -tau * val[k](i) / dir[k](i));
  return a;
}

}  // namespace

StageQpSolution solve_stage_qp(const std::vector<QpStage>& st) {
  const int Nst = static_cast<int>(st.size());
  const int N = Nst - 1;  // dynamics stages

  StageQpSolution res;
  if (Nst < 2) return res;

  std::vector<int> m(Nst), n(Nst);
  int m_total = 0;
  for (int k = 0; k < Nst; ++k) {
    m[k] = static_cast<int>(st[k].R.rows());
    n[k] = static_cast<int>(st[k].h.size());
    m_total += n[k];
  }

  // Iterate. dx.col(0) stays pinned at zero throughout.
  std::vector<VecX> w(Nst), s(Nst), lam(Nst);
  MatX dx = MatX::Zero(6, Nst);
  MatX nu = MatX::Zero(6, Nst);  // col k: multiplier of the dx_k dynamics
  for (int k = 0; k < Nst; ++k) {
    w[k] = VecX::Zero(m[k]);
    s[k] = st[k].h.cwiseAbs().cwiseMax(1.0);
    lam[k] = VecX::Ones(n[k]);
  }

  // Residuals and factorization storage.
  std::vector<VecX> rw(Nst), ri(Nst), rc(Nst), beta(Nst), rbw(Nst);
  std::vector<VecX> kap(Nst), dw(Nst), ds(Nst), dl(Nst);
  MatX rx(6, Nst), rd(6, N), qb(6, Nst), p(6, Nst);
  MatX ddx(6, Nst), dnu(6, Nst);
  std::vector<Mat6> P(Nst);
  std::vector<MatX> K(Nst);
  std::vector<Eigen::LLT<MatX>> llt(Nst);

  // Problem scale for the residual test; row normals are expected to be
  // O(1), so the cost gradient and the row offsets set the natural size.
  double scale = 1.0;
  for (int k = 0; k < Nst; ++k) {
    if (m[k] > 0) scale = std::max(scale, st[k].r.cwiseAbs().maxCoeff());
    if (n[k] > 0) scale = std::max(scale, st[k].h.cwiseAbs().maxCoeff());
  }
  const double tol_mu = 1e-11 * scale;
  const double tol_res = 1e-9 * scale;
  const int max_iter = 60;

  // Backward/forward solve for one right-hand side, reusing the current
  // factorization. rc holds the complementarity targets.
  auto solve_rhs = [&]() {
    for (int k = 0; k < Nst; ++k) {
      if (n[k] > 0) {
        beta[k] = -(rc[k].array() + lam[k].array() * ri[k].array()) /
                  s[k].array();
        rbw[k] = rw[k] - st[k].F.transpose() * beta[k];
        if (k >= 1) qb.col(k) = rx.col(k) - st[k].E.transpose() * beta[k];
      } else {
        rbw[k] = rw[k];
        if (k >= 1) qb.col(k) = rx.col(k);
      }
    }
    for (int k = N; k >= 0; --k) {
      if (k == N) {
        if (m[N] > 0) {
          kap[N] = llt[N].solve(rbw[N]);
          p.col(N) = qb.col(N) - K[N].transpose() * rbw[N];
        } else {
          p.col(N) = qb.col(N);
        }
        continue;
      }
      const Vec6 t6 = p.col(k + 1) - P[k + 1] * rd.col(k);
      VecX b = rbw[k];
      b.noalias() += st[k].B.transpose() * t6;
      kap[k] = llt[k].solve(b);
      if (k >= 1)
        p.col(k) = qb.col(k) + st[k].A.transpose() * t6 - K[k].transpose() * b;
    }
    ddx.col(0).setZero();
    for (int k = 0; k < N; ++k) {
      dw[k] = -(K[k] * ddx.col(k) + kap[k]);
      ddx.col(k + 1) = st[k].A * ddx.col(k) + st[k].B * dw[k] - rd.col(k);
    }
    dw[N] = m[N] > 0 ? VecX(-(K[N] * ddx.col(N) + kap[N])) : VecX(0);
    for (int k = 1; k < Nst; ++k) dnu.col(k) = -(P[k] * ddx.col(k) + p.col(k));
    for (int k = 0; k < Nst; ++k) {
      if (n[k] == 0) {
        ds[k].resize(0);
        dl[k].resize(0);
        continue;
      }
      ds[k] = st[k].E * ddx.col(k) + st[k].F * dw[k] + ri[k];
      dl[k] = -(rc[k].array() + lam[k].array() * ds[k].array()) / s[k].array();
    }
  };

  auto finish = [&](StageQpSolution::Status status) {
    res.status = status;
    res.dx = dx;
    res.w = std::move(w);
    return res;
  };

  for (int it = 0;; ++it) {
    // KKT residuals at the current point.
    double gap = 0.0;
    double rmax = 0.0;
    for (int k = 0; k < Nst; ++k) {
      rw[k] = st[k].R * w[k] + st[k].r;
      if (n[k] > 0) rw[k].noalias() -= st[k].F.transpose() * lam[k];
      if (k < N) rw[k].noalias() -= st[k].B.transpose() * nu.col(k + 1);
      if (k >= 1) {
        rx.col(k) = nu.col(k);
        if (n[k] > 0) rx.col(k).noalias() -= st[k].E.transpose() * lam[k];
        if (k < N) rx.col(k).noalias() -= st[k].A.transpose() * nu.col(k + 1);
        rmax = std::max(rmax, rx.col(k).cwiseAbs().maxCoeff());
      }
      if (k < N) {
        rd.col(k) =
            dx.col(k + 1) - st[k].A * dx.col(k) - st[k].B * w[k] - st[k].c;
        rmax = std::max(rmax, rd.col(k).cwiseAbs().maxCoeff());
      }
      if (n[k] > 0) {
        ri[k] = st[k].E * dx.col(k) + st[k].F * w[k] + st[k].h - s[k];
        gap += s[k].dot(lam[k]);
        rmax = std::max(rmax, ri[k].cwiseAbs().maxCoeff());
      }
      if (m[k] > 0) rmax = std::max(rmax, rw[k].cwiseAbs().maxCoeff());
    }
    const double mu = m_total > 0 ? gap / m_total : 0.0;
    res.mu = mu;
    res.residual = rmax;
    res.iterations = it;
    if (!std::isfinite(mu) || !std::isfinite(rmax))
      return finish(StageQpSolution::Status::kNumerical);
    if (mu <= tol_mu && rmax <= tol_res)
      return finish(StageQpSolution::Status::kConverged);
    if (it == max_iter) return finish(StageQpSolution::Status::kMaxIter);

    // Fold each row's slack/multiplier pair into the stage data and run the
    // Riccati recursion. Everything here is reused by both solves below.
    for (int k = N; k >= 0; --k) {
      const QpStage& g = st[k];
      Mat6 Qb = Mat6::Zero();
      MatX Sb = MatX::Zero(m[k], 6);
      MatX Rb = g.R;
      if (n[k] > 0) {
        const VecX wr = lam[k].array() / s[k].array();
        const MatX Ew = wr.asDiagonal() * g.E;
        Qb.noalias() = g.E.transpose() * Ew;
        Sb.noalias() = g.F.transpose() * Ew;
        Rb.noalias() += g.F.transpose() * (wr.asDiagonal() * g.F);
      }
      if (k == N) {
        if (m[N] > 0) {
          llt[N].compute(Rb);
          if (llt[N].info() != Eigen::Success)
            return finish(StageQpSolution::Status::kNumerical);
          K[N] = llt[N].solve(Sb);
          P[N] = Qb - Sb.transpose() * K[N];
        } else {
          P[N] = Qb;
        }
      } else {
        const MatX PB = P[k + 1] * g.B;
        const Mat6 PA = P[k + 1] * g.A;
        MatX Hh = Rb;
        Hh.noalias() += g.B.transpose() * PB;
        MatX Sh = Sb;
        Sh.noalias() += PB.transpose() * g.A;
        llt[k].compute(Hh);
        if (llt[k].info() != Eigen::Success)
          return finish(StageQpSolution::Status::kNumerical);
        K[k] = llt[k].solve(Sh);
        P[k] = Qb;
        P[k].noalias() += g.A.transpose() * PA;
        P[k].noalias() -= Sh.transpose() * K[k];
      }
      P[k] = 0.5 * (P[k] + P[k].transpose()).eval();
    }

    // Predictor: pure Newton step on the unperturbed conditions.
    for (int k = 0; k < Nst; ++k)
      rc[k] = (s[k].array() * lam[k].array()).matrix();
    solve_rhs();
    double sigma = 0.0;
    if (m_total > 0) {
      const double a_aff =
          std::min(step_length(s, ds, 1.0), step_length(lam, dl, 1.0));
      double gap_aff = 0.0;
      for (int k = 0; k < Nst; ++k)
        gap_aff += (s[k] + a_aff * ds[k]).dot(lam[k] + a_aff * dl[k]);
      const double mu_aff = std::max(0.0, gap_aff / m_total);
      sigma = std::pow(mu_aff / mu, 3);
      sigma = std::clamp(sigma, 0.0, 1.0);
    }

    // Corrector: recenter toward sigma*mu and compensate the second-order
    // complementarity error of the predictor. Same factorization.
    for (int k = 0; k < Nst; ++k)
      rc[k] = (s[k].array() * lam[k].array() +
               ds[k].array() * dl[k].array() - sigma * mu)
                  .matrix();
    solve_rhs();

    const double alpha =
        std::min(step_length(s, ds, 0.99), step_length(lam, dl, 0.99));
    if (!std::isfinite(alpha) || alpha <= 1e-12)
      return finish(StageQpSolution::Status::kNumerical);
    for (int k = 0; k < Nst; ++k) {
      w[k] += alpha * dw[k];
      s[k] += alpha * ds[k];
      lam[k] += alpha * dl[k];
    }
    dx += alpha * ddx;
    nu += alpha * dnu;
    bool finite = dx.allFinite() && nu.allFinite();
    for (int k = 0; k < Nst && finite; ++k)
      finite = w[k].allFinite() && s[k].allFinite() && lam[k].allFinite();
    if (!finite) return finish(StageQpSolution::Status::kNumerical);
  }
}

}  // namespace asv::psf
