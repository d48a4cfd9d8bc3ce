#pragma once

#include <Eigen/Dense>
#include <string>

#include "nullcone/action.hpp"
#include "nullcone/moment.hpp"
#include "nullcone/strata.hpp"

namespace nullcone {

/// The scaling action of the positive reals on R^2, generator diag(1, -1).
LinearAction make_scaling_r2();

/// sl(n, R) acting by conjugation on Mat(n, R), trace inner products on both
/// the algebra and V. Desk scale: 2 <= n <= 5.
LinearAction make_sln_conjugation(int n);

enum class BracketGroup { gl, sl };

/// Change-of-basis action of gl(n)/sl(n) on antisymmetric bracket tensors
/// Lambda^2 (R^n)* x R^n. The algebra inner product is the matrix trace form,
/// not the operator trace form the induced action would give. n <= 4.
LinearAction make_bracket_action(int n, BracketGroup group);

/// Structure constants c_{ij}^k (i < j) of a skew-symmetric bilinear bracket
/// on R^n, stored in the orthonormal coefficient basis of the action above.
struct BracketTensor {
  int n = 0;
  Eigen::VectorXd coeffs;  ///< index (i<j, k) -> pair_index(i,j) * n + k

  static int dim(int n) { return n * (n - 1) / 2 * n; }
  static BracketTensor zero(int n);
  static BracketTensor from_vector(int n, const Eigen::VectorXd& v);

  double coeff(int i, int j, int k) const;     ///< antisymmetric in (i, j)
  void set_coeff(int i, int j, int k, double value);  ///< i < j
  /// bracket of two vectors
  Eigen::VectorXd apply(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
};

/// Sum of squared Jacobiator components; zero exactly on Lie brackets.
double jacobi_defect(const BracketTensor& mu);

/// Nilpotency via the lower central series of the coefficient algebra.
bool bracket_is_nilpotent(const BracketTensor& mu, double tol = 1e-9);

struct NilsolitonReport {
  double initial_gradient;      ///< |grad F| at mu under the sl action
  bool soliton_candidate;       ///< near-critical already at mu
  FlowResult flow;
  double limit_gradient;
  double limit_jacobi_defect;
  StratumLabel label;
};

/// Criticality analysis of a nilpotent Lie bracket under the sl(n) action:
/// gradient residual at mu, the energy flow from mu, and the limit's label.
/// Throws DomainError for non-Jacobi or non-nilpotent input.
NilsolitonReport nilsoliton_residual(const BracketTensor& mu, const FlowOptions& fopts = {});

/// Resolves the CLI example names: "scaling-r2", "sl-conj:<n>",
/// "brackets:<n>:<gl|sl>". Throws ValidationError for unknown names.
LinearAction make_named_action(const std::string& name);

}  // namespace nullcone
