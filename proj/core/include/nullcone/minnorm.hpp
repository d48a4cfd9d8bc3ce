#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nullcone {

/// Minimizer of the norm over the convex hull of a finite point set,
/// together with the data needed to verify it independently.
struct MinNormCertificate {
  Eigen::VectorXd point;         ///< the minimizer
  Eigen::VectorXd coefficients;  ///< convex weights, one per input point
  std::vector<int> active_set;   ///< indices with positive coefficient
  double reconstruction_residual = 0.0;  ///< |point - sum c_i p_i|
  double optimality_residual = 0.0;      ///< max_i ( <b,b> - <b,p_i> )_+
  bool converged = true;
  int iterations = 0;
};

struct MinNormOptions {
  double tol = 1e-12;       ///< relative optimality threshold
  int max_iterations = 2000;
};

/// Wolfe's min-norm-point algorithm over conv(points). Deterministic for a
/// fixed input order (ties break toward the lowest index). Non-convergence
/// within the cap is reported in the certificate, not thrown.
MinNormCertificate min_norm_point(const std::vector<Eigen::VectorXd>& points,
                                  const MinNormOptions& opts = {});

/// Outcome of the relative-interior membership test for the origin.
struct RelativeInteriorCertificate {
  bool zero_in_interior = false;
  /// strictly positive convex coefficients with sum c_i p_i = 0 (on success)
  Eigen::VectorXd coefficients;
  /// on failure: <separator, p_i> >= 0 for all i, strict for at least one
  Eigen::VectorXd separator;
  /// indices spanning the minimal face of the hull containing 0
  /// (empty when 0 is not in the hull at all)
  std::vector<int> zero_face;
  double min_coefficient = 0.0;  ///< LP optimum: best achievable min-coefficient
  bool zero_in_hull = false;
  bool degenerate = false;  ///< numerical trouble building the separator
};

struct RelativeInteriorOptions {
  double positivity_threshold = 1e-10;  ///< "strictly positive" cutoff
  double hull_tol = 1e-10;              ///< |min-norm point| treated as zero
};

/// Decides whether 0 lies in the relative interior of conv(points), with a
/// positive-coefficient certificate or a separating functional.
RelativeInteriorCertificate zero_in_relative_interior(
    const std::vector<Eigen::VectorXd>& points,
    const RelativeInteriorOptions& opts = {});

}  // namespace nullcone
