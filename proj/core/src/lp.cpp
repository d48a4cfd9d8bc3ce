#include "nullcone/detail/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace nullcone::detail {

namespace {

// Tableau simplex on min c^T x, [A | I_art] rows already made b >= 0.
// Returns false if unbounded.
bool run_simplex(Eigen::MatrixXd& t, std::vector<int>& basis, int ncols,
                 double tol) {
  const int m = static_cast<int>(t.rows()) - 1;
  const int obj = m;  // objective row index
  for (long iter = 0; iter < 20000; ++iter) {
    int enter = -1;
    for (int j = 0; j < ncols; ++j) {  // Bland: first improving column
      if (t(obj, j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;  // optimal
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (t(i, enter) > tol) {
        const double ratio = t(i, ncols) / t(i, enter);
        if (ratio < best - tol ||
            (ratio < best + tol && (leave < 0 || basis[i] < basis[leave]))) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) return false;  // unbounded
    // pivot
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[leave] = enter;
  }
  return true;  // iteration cap; treat current point as the answer
}

}  // namespace

LpResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, double tol) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  LpResult res;
  if (m == 0) {
    // no constraints: minimum of c^T x over x >= 0
    res.x = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
      if (c[j] < -tol) {
        res.status = LpStatus::unbounded;
        return res;
      }
    res.status = LpStatus::optimal;
    res.objective = 0.0;
    return res;
  }

  // phase 1 tableau: columns [x (n) | artificials (m) | rhs]
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  for (int i = 0; i < m; ++i) {
    const double s = (b[i] < 0) ? -1.0 : 1.0;
    t.block(i, 0, 1, n) = s * a.row(i);
    t(i, n + i) = 1.0;
    t(i, n + m) = s * b[i];
  }
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  // phase-1 objective: sum of artificials, reduced over the basis
  for (int i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (int i = 0; i < m; ++i) t(m, n + i) = 0.0;

  run_simplex(t, basis, n + m, tol);
  const double scale1 = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (-t(m, n + m) > 1e3 * tol * scale1 && -t(m, n + m) > 1e-9 * scale1) {
    res.status = LpStatus::infeasible;
    return res;
  }

  // drive remaining artificials out of the basis where possible
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) {
      int enter = -1;
      for (int j = 0; j < n; ++j)
        if (std::abs(t(i, j)) > 1e3 * tol) {
          enter = j;
          break;
        }
      if (enter >= 0) {
        t.row(i) /= t(i, enter);
        for (int k = 0; k <= m; ++k) {
          if (k == i) continue;
          const double f = t(k, enter);
          if (f != 0.0) t.row(k) -= f * t.row(i);
        }
        basis[i] = enter;
      }
      // else: redundant row, leave the zero-valued artificial in place
    }
  }

  // phase 2: rebuild objective row for c, forbid artificials
  t.row(m).setZero();
  for (int j = 0; j < n; ++j) t(m, j) = c[j];
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) t.row(m) -= c[basis[i]] * t.row(i);
  }
  for (int i = 0; i < m; ++i) t(m, n + i) = 1e30;  // block artificial re-entry

  if (!run_simplex(t, basis, n + m, tol)) {
    res.status = LpStatus::unbounded;
    return res;
  }

  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) res.x[basis[i]] = t(i, n + m);
  res.objective = c.dot(res.x);
  res.status = LpStatus::optimal;
  return res;
}

}  // namespace nullcone::detail
