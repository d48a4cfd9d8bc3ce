#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "nullcone/action.hpp"

namespace nullcone {

/// Value of the moment map at a vector: coordinates in the orthonormal
/// p-basis, the corresponding symmetric operator, and the energy |m(v)|^2.
struct MomentValue {
  Eigen::VectorXd p_coords;
  Eigen::MatrixXd as_operator;
  double energy = 0.0;
  double norm() const { return p_coords.norm(); }
};

/// m(v), defined by <m(v), A> = <A v, v> / |v|^2 for A in p. Scale-invariant.
MomentValue moment(const Eigen::VectorXd& v, const LinearAction& action);

/// The shifted operator beta - |beta|^2 Id of a p-element (internal coords).
Eigen::MatrixXd beta_plus(const Eigen::VectorXd& beta_p_coords,
                          const LinearAction& action);

/// Gradient of the energy map F = |m|^2 at v: (4/|v|^2) m(v)^+ v.
Eigen::VectorXd grad_energy(const Eigen::VectorXd& v, const LinearAction& action);

/// Differential of the moment map along a tangent direction w (projected
/// orthogonal to v): <dm_v(w), A> = (2/|v|^2) <A v, w>. Returns p-coords.
Eigen::VectorXd moment_differential(const Eigen::VectorXd& v, const Eigen::VectorXd& w,
                                    const LinearAction& action);

struct FlowOptions {
  double grad_tol = 1e-10;
  long max_steps = 1000000;
  int trace_stride = 0;        ///< 0 = keep no intermediate states
  double step_rel_err = 1e-9;  ///< local error target of the embedded pair
  long stagnation_window = 10000;
};

/// Negative gradient flow of the energy map on the unit sphere.
struct FlowResult {
  Eigen::VectorXd initial;
  Eigen::VectorXd limit;
  long steps = 0;
  double gradient_residual = 0.0;
  bool converged = false;
  bool accelerated = false;  ///< Newton-type acceleration engaged near a critical set
  double time = 0.0;         ///< flow time reached
  std::vector<double> energy_trace;
  std::vector<std::pair<double, Eigen::VectorXd>> trajectory;  ///< (t, v) samples
};

/// Integrates v' = -grad F(v) with an adaptive embedded Runge-Kutta pair,
/// renormalizing to the sphere after every step. Stops when |grad F| falls
/// under opts.grad_tol or the step cap is hit (flagged, not thrown).
FlowResult flow(const Eigen::VectorXd& v, const LinearAction& action,
                const FlowOptions& opts = {});

/// Hessian of the energy map at a critical point v_c along w (projected
/// orthogonal to v_c and rescaled to |w| = |v_c|):
///   4 <b+ w, w>/|v_c|^2 + 2 |dm_{v_c} w|^2,  b = m(v_c).
/// For an eigenvector of b+ this is the eigenvalue formula. Throws if v_c is
/// not critical to within crit_tol.
double hessian_energy_at_critical(const Eigen::VectorXd& v_c, const Eigen::VectorXd& w,
                                  const LinearAction& action, double crit_tol = 1e-8);

}  // namespace nullcone
