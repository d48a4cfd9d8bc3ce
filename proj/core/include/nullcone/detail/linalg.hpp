#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nullcone::detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Row-major flattening of a matrix into a vector.
VectorXd flatten(const MatrixXd& a);
MatrixXd unflatten(const VectorXd& v, int rows, int cols);

/// Modified Gram-Schmidt. Returns an orthonormal basis of the span of the
/// input columns; columns whose residual falls below tol * (their norm) are
/// dropped as dependent.
MatrixXd orthonormal_columns(const MatrixXd& a, double tol = 1e-12);

/// Orthonormal basis of ker A (columns), via SVD. `tol` is relative to the
/// largest singular value.
MatrixXd nullspace(const MatrixXd& a, double tol = 1e-11);

/// Distance from x to the column span of basis (basis need not be orthonormal).
double span_residual(const MatrixXd& basis, const VectorXd& x);

/// Least-squares coordinates of x in the columns of basis.
VectorXd span_coordinates(const MatrixXd& basis, const VectorXd& x);

/// Orthogonal projection of x onto the span of the (orthonormal) columns q.
inline VectorXd project_onto(const MatrixXd& q, const VectorXd& x) {
  return q * (q.transpose() * x);
}

struct SimDiagResult {
  MatrixXd q;          // orthogonal, columns are joint eigenvectors
  MatrixXd eigenvals;  // (i, j): eigenvalue of ops[j] on column i of q
  double residual;     // largest off-diagonal entry left over
};

/// Simultaneously diagonalizes a family of commuting symmetric matrices by
/// recursive block splitting. `cluster_tol` groups eigenvalues relative to
/// the spectral scale of each operator.
SimDiagResult simultaneous_diagonalize(const std::vector<MatrixXd>& ops,
                                       double cluster_tol = 1e-8);

/// Matrix exponential. Symmetric input goes through an eigendecomposition,
/// anything else through scaling-and-squaring.
MatrixXd expm(const MatrixXd& a);

/// exp of a symmetric matrix from its precomputed eigendecomposition,
/// exp(s * Q diag(d) Q^T).
MatrixXd expm_sym(const MatrixXd& q, const VectorXd& d, double s);

/// Principal logarithm of a unit lower (or upper) triangular matrix via the
/// nilpotent series; exact after dim terms.
MatrixXd log_unitriangular(const MatrixXd& a);

/// Deterministic splitmix/xoshiro-free RNG used across tests, sampling and
/// the CLI. Identical output for identical seeds on a given platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64();
  /// uniform in [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  /// standard normal (Box-Muller)
  double normal();
  VectorXd normal_vector(int n);
  /// uniform on the unit sphere of dimension n
  VectorXd unit_vector(int n);
  int uniform_int(int lo, int hi);  // inclusive bounds

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nullcone::detail
