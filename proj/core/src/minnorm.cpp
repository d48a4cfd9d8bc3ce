#include "nullcone/minnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nullcone/detail/linalg.hpp"
#include "nullcone/detail/lp.hpp"
#include "nullcone/errors.hpp"

namespace nullcone {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Affine minimizer of |B a| subject to 1^T a = 1 over the columns of b.
VectorXd affine_minimizer(const MatrixXd& b) {
  const int k = static_cast<int>(b.cols());
  if (k == 1) return VectorXd::Ones(1);
  // a = e_1 + Z t, Z spans {1^T a = 0}
  MatrixXd z = MatrixXd::Zero(k, k - 1);
  for (int j = 0; j < k - 1; ++j) {
    z(j, j) = 1.0;
    z(j + 1, j) = -1.0;
  }
  const MatrixXd bz = b * z;
  const VectorXd rhs = -b.col(0);
  const VectorXd t = bz.colPivHouseholderQr().solve(rhs);
  VectorXd a = z * t;
  a[0] += 1.0;
  return a;
}

}  // namespace

MinNormCertificate min_norm_point(const std::vector<Eigen::VectorXd>& points,
                                  const MinNormOptions& opts) {
  if (points.empty()) throw DomainError("min_norm_point: empty point set");
  const int n = static_cast<int>(points.size());
  const int d = static_cast<int>(points[0].size());

  MinNormCertificate cert;
  cert.coefficients = VectorXd::Zero(n);

  double scale2 = 0.0;
  for (const auto& p : points) scale2 = std::max(scale2, p.squaredNorm());
  if (d == 0 || scale2 == 0.0) {
    // all points are the origin (or live in R^0)
    cert.point = VectorXd::Zero(d);
    cert.coefficients[0] = 1.0;
    cert.active_set = {0};
    return cert;
  }
  const double tol = opts.tol * std::max(scale2, 1.0);

  int start = 0;
  for (int i = 1; i < n; ++i)
    if (points[i].squaredNorm() < points[start].squaredNorm() - tol) start = i;

  std::vector<int> s{start};
  VectorXd c = VectorXd::Ones(1);
  VectorXd x = points[start];

  const double eta = 1e-14;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    // optimality: min_j <x, p_j> vs |x|^2
    int jmin = 0;
    double vmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double v = x.dot(points[j]);
      if (v < vmin - 0.0) {
        vmin = v;
        jmin = j;
      }
    }
    if (vmin >= x.squaredNorm() - tol) break;
    if (std::find(s.begin(), s.end(), jmin) != s.end()) break;  // numerically stuck
    s.push_back(jmin);
    c.conservativeResize(s.size());
    c[c.size() - 1] = 0.0;

    // minor cycle
    for (int minor = 0; minor < 4 * n + 8; ++minor) {
      MatrixXd b(d, s.size());
      for (std::size_t k = 0; k < s.size(); ++k) b.col(k) = points[s[k]];
      VectorXd a = affine_minimizer(b);
      if (a.minCoeff() > eta) {
        c = a;
        break;
      }
      // step toward a until a coefficient hits zero
      double theta = 1.0;
      for (int k = 0; k < a.size(); ++k) {
        if (a[k] <= eta && c[k] - a[k] > eta)
          theta = std::min(theta, c[k] / (c[k] - a[k]));
      }
      c = theta * a + (1.0 - theta) * c;
      // drop zeroed points (keep lowest-index behavior deterministic)
      std::vector<int> keep;
      for (int k = 0; k < c.size(); ++k)
        if (c[k] > eta) keep.push_back(k);
      if (keep.size() == s.size()) {
        // nothing hit zero (shouldn't happen); accept a to avoid looping
        c = a.cwiseMax(0.0);
        c /= c.sum();
        break;
      }
      std::vector<int> s2;
      VectorXd c2(keep.size());
      for (std::size_t k = 0; k < keep.size(); ++k) {
        s2.push_back(s[keep[k]]);
        c2[k] = c[keep[k]];
      }
      s = std::move(s2);
      c = c2;
      if (s.size() == 1) {
        c = VectorXd::Ones(1);
        break;
      }
    }
    x.setZero();
    for (std::size_t k = 0; k < s.size(); ++k) x += c[k] * points[s[k]];
  }
  cert.converged = iter < opts.max_iterations;
  cert.iterations = iter;

  cert.point = x;
  for (std::size_t k = 0; k < s.size(); ++k) cert.coefficients[s[k]] = std::max(c[k], 0.0);
  const double csum = cert.coefficients.sum();
  if (csum > 0) cert.coefficients /= csum;
  for (int i = 0; i < n; ++i)
    if (cert.coefficients[i] > eta) cert.active_set.push_back(i);

  VectorXd rec = VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) rec += cert.coefficients[i] * points[i];
  cert.reconstruction_residual = (rec - cert.point).norm();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, cert.point.squaredNorm() - cert.point.dot(points[i]));
  cert.optimality_residual = std::max(worst, 0.0);
  return cert;
}

namespace {

// Feasible region F = { c >= 0, sum c = 1, M c = 0 }.  Maximize c_target
// (or the minimum coefficient when target < 0) over F via the simplex.
detail::LpResult solve_over_hull(const MatrixXd& m, int n, int target) {
  MatrixXd a(m.rows() + 1, n);
  a.topRows(m.rows()) = m;
  a.bottomRows(1).setOnes();
  VectorXd b = VectorXd::Zero(m.rows() + 1);
  b[m.rows()] = 1.0;
  VectorXd cost = VectorXd::Zero(n);
  cost[target] = -1.0;
  return detail::simplex_solve(a, b, cost);
}

}  // namespace

RelativeInteriorCertificate zero_in_relative_interior(
    const std::vector<Eigen::VectorXd>& points,
    const RelativeInteriorOptions& opts) {
  if (points.empty())
    throw DomainError("zero_in_relative_interior: empty point set");
  const int n = static_cast<int>(points.size());
  const int d = static_cast<int>(points[0].size());

  RelativeInteriorCertificate out;

  MatrixXd m(d, n);
  for (int j = 0; j < n; ++j) m.col(j) = points[j];
  const double scale = m.size() > 0 ? std::max(m.cwiseAbs().maxCoeff(), 1.0) : 1.0;

  // max-min-coefficient LP: c = delta + u, u >= 0, minimize 1^T u
  // subject to (M - (M 1) 1^T / n) u = -(M 1)/n.
  const VectorXd m1 = m.rowwise().sum();
  MatrixXd e = m - (m1 / n) * Eigen::RowVectorXd::Ones(n);
  VectorXd f = -m1 / n;
  detail::LpResult lp = detail::simplex_solve(e, f, VectorXd::Ones(n));

  if (lp.status == detail::LpStatus::optimal) {
    const double delta = (1.0 - lp.x.sum()) / n;
    out.min_coefficient = delta;
    if (delta > opts.positivity_threshold) {
      out.zero_in_interior = true;
      out.zero_in_hull = true;
      out.coefficients = lp.x.array() + delta;
      for (int i = 0; i < n; ++i) out.zero_face.push_back(i);
      return out;
    }
  }

  // 0 not in the relative interior; find out whether it is in the hull at all
  MinNormCertificate mn = min_norm_point(points);
  if (mn.point.norm() > opts.hull_tol * scale) {
    out.zero_in_hull = false;
    out.separator = mn.point;  // <b, p_i> >= |b|^2 > 0 for every i
    return out;
  }
  out.zero_in_hull = true;

  // the minimal face containing 0: grow the set of indices that can carry a
  // positive coefficient in some representation of 0
  VectorXd acc = mn.coefficients;
  if (lp.status == detail::LpStatus::optimal) {
    VectorXd c0 = lp.x.array() + std::max(out.min_coefficient, 0.0);
    if (c0.minCoeff() > -1e-12 && std::abs(c0.sum() - 1.0) < 1e-6) acc += c0;
  }
  for (int i = 0; i < n; ++i) {
    if (acc[i] > opts.positivity_threshold) continue;
    detail::LpResult li = solve_over_hull(m, n, i);
    if (li.status == detail::LpStatus::optimal &&
        li.x[i] > opts.positivity_threshold)
      acc += li.x;
  }
  acc /= std::max(acc.sum(), 1e-300);
  for (int i = 0; i < n; ++i)
    if (acc[i] > 1e-14) out.zero_face.push_back(i);

  if (static_cast<int>(out.zero_face.size()) == n) {
    // every index supports a positive representation: 0 is interior after all
    // (the LP optimum sat at the threshold); report success with the average
    out.zero_in_interior = true;
    out.coefficients = acc;
    out.min_coefficient = acc.minCoeff();
    return out;
  }

  // separator: project the off-face points away from the face span and take
  // the min-norm point of the projections
  MatrixXd face(d, out.zero_face.size());
  for (std::size_t k = 0; k < out.zero_face.size(); ++k)
    face.col(static_cast<int>(k)) = points[out.zero_face[k]];
  MatrixXd q = detail::orthonormal_columns(face);
  std::vector<Eigen::VectorXd> proj;
  std::vector<int> proj_idx;
  std::vector<bool> on_face(n, false);
  for (int i : out.zero_face) on_face[i] = true;
  for (int i = 0; i < n; ++i) {
    if (on_face[i]) continue;
    VectorXd r = points[i] - detail::project_onto(q, points[i]);
    proj.push_back(r);
    proj_idx.push_back(i);
  }
  if (proj.empty()) {
    out.degenerate = true;
    out.separator = VectorXd::Zero(d);
    return out;
  }
  MinNormCertificate sep = min_norm_point(proj);
  if (sep.point.norm() <= opts.hull_tol * scale) {
    out.degenerate = true;  // face detection and projection disagree
    out.separator = VectorXd::Zero(d);
    return out;
  }
  out.separator = sep.point;
  return out;
}

}  // namespace nullcone
