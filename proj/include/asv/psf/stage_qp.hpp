#pragma once

#include <vector>

#include "asv/core/types.hpp"

namespace asv::psf {

// One stage of a linear-quadratic control subproblem in deviation variables.
// Stage k owns an input w_k (physical input move plus any slack columns) and
// the state deviation dx_k reached through
//
//   dx_{k+1} = A dx_k + B w_k + c,     dx_0 = 0,
//
// subject to per-stage half-planes  E dx_k + F w_k + h >= 0  and the cost
// sum_k 1/2 w_k' R w_k + r' w_k. The final stage carries no dynamics (A, B,
// c are ignored there) but may still own rows and slack-only inputs.
struct QpStage {
  Mat6 A = Mat6::Zero();
  MatX B;  // 6 x m
  Vec6 c = Vec6::Zero();
  MatX R;  // m x m, positive definite; m may be zero on the final stage
  VecX r;  // m
  MatX E;  // rows x 6
  MatX F;  // rows x m
  VecX h;  // rows
};

// Stage-structured QP solved by a primal-dual interior-point method. Each
// Newton step folds the row slack/multiplier pairs into the stage Hessians
// and solves the equality-constrained remainder with a Riccati sweep, so the
// cost per iteration is linear in the horizon and independent of which rows
// end up active. Deterministic: identical stage data, identical iterates.
struct StageQpSolution {
  enum class Status { kConverged, kMaxIter, kNumerical };
  Status status = Status::kNumerical;
  MatX dx;              // 6 x (N+1), first column zero
  std::vector<VecX> w;  // per-stage inputs, length N+1
  double mu = 0.0;      // complementarity average at exit
  double residual = 0.0;  // max KKT residual at exit
  int iterations = 0;
};

StageQpSolution solve_stage_qp(const std::vector<QpStage>& stages);

}  // namespace asv::psf
