#pragma once

#include "asv/core/types.hpp"

namespace asv::psf {

// Dense strictly convex QP:
//   min  1/2 x'G x + g0'x
//   s.t. CE'x + ce0  = 0      (columns of CE are equality normals)
//        CI'x + ci0 >= 0      (columns of CI are inequality normals)
//
// Solved with the dual active-set method: start at the unconstrained
// minimizer and add violated constraints one at a time, taking dual steps to
// drop blocking constraints. G must be positive definite. The method is
// deterministic — identical inputs give identical iterates.
struct QpResult {
  enum class Status { kOptimal, kInfeasible, kDegenerate };
  Status status = Status::kDegenerate;
  VecX x;
  VecX lambda;  // inequality multipliers, >= 0, aligned with CI columns
  double objective = 0.0;
  int iterations = 0;
};

QpResult solve_qp(const MatX& G, const VecX& g0, const MatX& CE,
                  const VecX& ce0, const MatX& CI, const VecX& ci0);

}  // namespace asv::psf
