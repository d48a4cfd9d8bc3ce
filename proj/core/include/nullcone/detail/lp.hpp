#pragma once

#include <Eigen/Dense>

namespace nullcone::detail {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// Solves min c^T x subject to A x = b, x >= 0 with a dense two-phase
/// simplex (Bland's rule; deterministic). Sized for the small problems the
/// weight-hull machinery produces, not for anything large.
LpResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, double tol = 1e-11);

}  // namespace nullcone::detail
