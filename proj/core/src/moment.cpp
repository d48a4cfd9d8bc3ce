#include "nullcone/moment.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"

namespace nullcone {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// internal-coordinate versions; public functions convert at the boundary

VectorXd moment_coords_internal(const VectorXd& v, const LinearAction& action) {
  const int dp = action.dim_p();
  VectorXd c(dp);
  const double n2 = v.squaredNorm();
  for (int j = 0; j < dp; ++j) c[j] = v.dot(action.p_op(j) * v) / n2;
  return c;
}

VectorXd grad_internal(const VectorXd& v, const LinearAction& action) {
  const VectorXd mc = moment_coords_internal(v, action);
  const double n2 = v.squaredNorm();
  VectorXd mv = VectorXd::Zero(v.size());
  for (int j = 0; j < action.dim_p(); ++j) mv += mc[j] * (action.p_op(j) * v);
  return (4.0 / n2) * (mv - mc.squaredNorm() * v);
}

}  // namespace

MomentValue moment(const Eigen::VectorXd& v, const LinearAction& action) {
  if (v.norm() == 0.0) throw DomainError("moment: v = 0 is outside the domain");
  const VectorXd vi = action.to_internal(v);
  MomentValue out;
  out.p_coords = moment_coords_internal(vi, action);
  out.as_operator = action.op_from_internal(action.p_element_op(out.p_coords));
  out.energy = out.p_coords.squaredNorm();
  return out;
}

Eigen::MatrixXd beta_plus(const Eigen::VectorXd& beta_p_coords,
                          const LinearAction& action) {
  MatrixXd op = action.p_element_op(beta_p_coords);
  op -= beta_p_coords.squaredNorm() * MatrixXd::Identity(action.dim_v(), action.dim_v());
  return op;
}

Eigen::VectorXd grad_energy(const Eigen::VectorXd& v, const LinearAction& action) {
  if (v.norm() == 0.0) throw DomainError("grad_energy: v = 0 is outside the domain");
  return action.from_internal(grad_internal(action.to_internal(v), action));
}

Eigen::VectorXd moment_differential(const Eigen::VectorXd& v, const Eigen::VectorXd& w,
                                    const LinearAction& action) {
  if (v.norm() == 0.0) throw DomainError("moment_differential: v = 0");
  VectorXd vi = action.to_internal(v);
  VectorXd wi = action.to_internal(w);
  wi -= (vi.dot(wi) / vi.squaredNorm()) * vi;  // tangent part
  const double n2 = vi.squaredNorm();
  VectorXd c(action.dim_p());
  for (int j = 0; j < action.dim_p(); ++j) c[j] = 2.0 * wi.dot(action.p_op(j) * vi) / n2;
  return c;
}

namespace {

// Bogacki-Shampine style embedded pair is enough at these dimensions, but we
// use the classical Dormand-Prince 5(4) coefficients for headroom.
struct Rk45 {
  static constexpr int stages = 7;
  // clang-format off
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double b5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192,
                                   -2187.0 / 6784, 11.0 / 84, 0};
  static constexpr double b4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640,
                                   -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
  // clang-format on
};
constexpr double Rk45::a[7][6];
constexpr double Rk45::b5[7];
constexpr double Rk45::b4[7];

struct NewtonAccel {
  bool moved = false;
  VectorXd v;
};

// One damped Newton-style step restricted to the positive-curvature part of
// the (approximate) Hessian eigenframe at a near-critical point. Skipped
// when the gradient has real mass along negative curvature: there the flow
// is escaping a saddle and pulling back toward it would stall the run.
NewtonAccel newton_acceleration(const VectorXd& v, const LinearAction& action) {
  NewtonAccel out;
  const int n = static_cast<int>(v.size());
  const VectorXd mc = moment_coords_internal(v, action);
  MatrixXd bp = action.p_element_op(mc) - mc.squaredNorm() * MatrixXd::Identity(n, n);

  // orthonormal basis of v^perp
  MatrixXd full(n, n);
  full.col(0) = v / v.norm();
  full.rightCols(n - 1) = MatrixXd::Identity(n, n).rightCols(n - 1);
  MatrixXd q = detail::orthonormal_columns(full).rightCols(n - 1);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.transpose() * (0.5 * (bp + bp.transpose())) * q);
  const VectorXd grad = grad_internal(v, action);
  const double f0 = mc.squaredNorm();

  VectorXd dir = VectorXd::Zero(n);
  double g_pos2 = 0.0;
  for (int a = 0; a < n - 1; ++a) {
    const VectorXd w = q * es.eigenvectors().col(a);
    VectorXd dm(action.dim_p());
    for (int j = 0; j < action.dim_p(); ++j) dm[j] = 2.0 * w.dot(action.p_op(j) * v);
    const double curv = 4.0 * es.eigenvalues()[a] + 2.0 * dm.squaredNorm();
    const double g = grad.dot(w);
    if (curv > 1e-8) {
      dir -= (g / curv) * w;
      g_pos2 += g * g;
    }
  }
  if (dir.norm() < 1e-15) return out;
  if (g_pos2 < 0.9 * grad.squaredNorm()) return out;  // saddle escape in progress

  double alpha = 1.0;
  for (int bt = 0; bt < 40; ++bt) {
    VectorXd vn = (v + alpha * dir).normalized();
    if (moment_coords_internal(vn, action).squaredNorm() < f0 &&
        grad_internal(vn, action).norm() < grad.norm()) {
      out.moved = true;
      out.v = vn;
      return out;
    }
    alpha *= 0.5;
  }
  return out;
}

}  // namespace

FlowResult flow(const Eigen::VectorXd& v, const LinearAction& action,
                const FlowOptions& opts) {
  if (v.norm() == 0.0) throw DomainError("flow: v = 0 is outside the domain");
  FlowResult res;
  res.initial = v / v.norm();

  VectorXd y = action.to_internal(v);
  y /= y.norm();

  auto f = [&](const VectorXd& x) { return VectorXd(-grad_internal(x, action)); };
  auto energy = [&](const VectorXd& x) {
    return moment_coords_internal(x, action).squaredNorm();
  };

  double t = 0.0;
  double h = 1e-3;
  VectorXd k[Rk45::stages];
  k[0] = f(y);
  double gnorm = k[0].norm();
  res.energy_trace.push_back(energy(y));
  if (opts.trace_stride > 0) res.trajectory.emplace_back(0.0, action.from_internal(y));

  long accepted = 0;
  long since_improvement = 0;
  double best_gnorm = gnorm;

  while (gnorm >= opts.grad_tol && accepted < opts.max_steps) {
    // stages
    bool ok = true;
    for (int s = 1; s < Rk45::stages; ++s) {
      VectorXd ys = y;
      for (int j = 0; j < s; ++j) ys += h * Rk45::a[s][j] * k[j];
      k[s] = f(ys);
      if (!k[s].allFinite()) {
        ok = false;
        break;
      }
    }
    if (ok) {
      VectorXd y5 = y, y4 = y;
      for (int s = 0; s < Rk45::stages; ++s) {
        y5 += h * Rk45::b5[s] * k[s];
        y4 += h * Rk45::b4[s] * k[s];
      }
      const double err = (y5 - y4).norm();
      const double tol = opts.step_rel_err * (1.0 + y.norm());
      if (err <= tol && y5.allFinite()) {
        y5 /= y5.norm();  // back to the sphere
        const double fe = energy(y5);
        if (fe <= res.energy_trace.back() + 1e-14) {
          y = y5;
          t += h;
          ++accepted;
          res.energy_trace.push_back(fe);
          if (opts.trace_stride > 0 && accepted % opts.trace_stride == 0)
            res.trajectory.emplace_back(t, action.from_internal(y));
          k[0] = f(y);
          gnorm = k[0].norm();
          if (gnorm < 0.99 * best_gnorm) {
            best_gnorm = gnorm;
            since_improvement = 0;
          } else if (++since_improvement >= opts.stagnation_window) {
            auto acc = newton_acceleration(y, action);
            if (acc.moved) {
              y = acc.v;
              res.accelerated = true;
              res.energy_trace.push_back(energy(y));
              k[0] = f(y);
              gnorm = k[0].norm();
            }
            since_improvement = 0;
          }
          h = std::min(h * std::min(5.0, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2)), 1e6);
          continue;
        }
      }
    }
    h *= 0.5;
    if (h < 1e-300) break;
  }

  res.steps = accepted;
  res.gradient_residual = gnorm;
  res.converged = gnorm < opts.grad_tol;
  res.time = t;
  res.limit = action.from_internal(y);
  res.limit /= res.limit.norm();
  if (opts.trace_stride > 0 &&
      (res.trajectory.empty() || res.trajectory.back().first != t))
    res.trajectory.emplace_back(t, res.limit);
  return res;
}

double hessian_energy_at_critical(const Eigen::VectorXd& v_c, const Eigen::VectorXd& w,
                                  const LinearAction& action, double crit_tol) {
  VectorXd v = action.to_internal(v_c);
  const double gres = grad_internal(v, action).norm();
  if (gres > crit_tol) {
    std::ostringstream os;
    os << "hessian_energy_at_critical: point is not critical (|grad| = " << gres << ")";
    throw DomainError(os.str());
  }
  VectorXd wi = action.to_internal(w);
  wi -= (v.dot(wi) / v.squaredNorm()) * v;
  if (wi.norm() < 1e-14)
    throw DomainError("hessian_energy_at_critical: direction is parallel to v_c");
  wi *= v.norm() / wi.norm();

  const VectorXd mc = moment_coords_internal(v, action);
  const int n = static_cast<int>(v.size());
  MatrixXd bp = action.p_element_op(mc) - mc.squaredNorm() * MatrixXd::Identity(n, n);
  VectorXd dm(action.dim_p());
  for (int j = 0; j < action.dim_p(); ++j)
    dm[j] = 2.0 * wi.dot(action.p_op(j) * v) / v.squaredNorm();
  return 4.0 * wi.dot(bp * wi) / v.squaredNorm() + 2.0 * dm.squaredNorm();
}

}  // namespace nullcone
