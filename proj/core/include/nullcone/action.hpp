#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nullcone {

/// Numerical tolerances shared across the toolkit. Algebraic identities are
/// checked at relative 1e-9; see the per-field comments for the rest.
struct Tolerances {
  double algebra_tol = 1e-9;       ///< transpose/bracket closure, compatibility
  double weight_dedup_tol = 1e-8;  ///< weights closer than this are merged
  double support_rel_tol = 1e-10;  ///< |v_i| > tol * |v| decides membership in the support
  double cluster_tol = 1e-8;       ///< eigenvalue clustering, relative to spectral radius
};

/// Raw description of a linear action: generators of the Lie algebra as
/// operators on V, plus the two inner products. Mirrors the on-disk format.
struct ActionSpec {
  int dim_v = 0;
  std::vector<Eigen::MatrixXd> generators;
  std::optional<Eigen::MatrixXd> inner_v;  ///< SPD form on V; identity if absent
  /// SPD Gram matrix of the algebra inner product on the generators;
  /// defaults to the trace form tr(A B^T) of the operators on V.
  std::optional<Eigen::MatrixXd> inner_g;
  std::vector<std::string> labels;
  std::string name;
};

/// Residuals recorded while validating the reductivity axioms.
struct ValidationReport {
  double transpose_residual = 0.0;
  double bracket_residual = 0.0;
  double compatibility_residual = 0.0;  ///< ad(k) skew / ad(p) symmetric
  double kp_orthogonality = 0.0;
  int worst_generator = -1;
};

class CartanSplit;
class TorusFrame;

/// A validated linear action of a real reductive matrix group, held in
/// coordinates where the inner product on V is the standard one (a change of
/// basis by inner_v^{1/2} is applied on construction and undone at the API
/// boundary). The algebra basis is orthonormal for inner_g and ordered with
/// the skew part first: [k-basis | p-basis].
class LinearAction {
public:
  static LinearAction from_spec(const ActionSpec& spec, const Tolerances& tol = {});

  int dim_v() const { return dim_v_; }
  int dim_g() const { return static_cast<int>(g_basis_.size()); }
  int dim_k() const { return dim_k_; }
  int dim_p() const { return dim_g() - dim_k_; }
  bool abelian() const;

  const std::string& name() const { return name_; }
  const Tolerances& tolerances() const { return tol_; }
  const ValidationReport& validation() const { return validation_; }

  /// orthonormal algebra basis as operators (internal coordinates)
  const std::vector<Eigen::MatrixXd>& g_basis() const { return g_basis_; }
  const Eigen::MatrixXd& k_op(int a) const { return g_basis_[a]; }
  const Eigen::MatrixXd& p_op(int j) const { return g_basis_[dim_k_ + j]; }

  /// operator of an algebra element given by coordinates in the g-basis
  Eigen::MatrixXd algebra_op(const Eigen::VectorXd& g_coords) const;
  /// operator of a p-element given by coordinates in the p-basis
  Eigen::MatrixXd p_element_op(const Eigen::VectorXd& p_coords) const;
  /// coordinates of an operator known to lie in the algebra; residual out
  Eigen::VectorXd algebra_coords(const Eigen::MatrixXd& op, double* residual = nullptr) const;

  /// change of coordinates between the user's basis and the internal one
  Eigen::VectorXd to_internal(const Eigen::VectorXd& v) const;
  Eigen::VectorXd from_internal(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd op_from_internal(const Eigen::MatrixXd& op) const;
  bool identity_metric() const { return identity_metric_; }

  const CartanSplit& split() const;
  const TorusFrame& torus() const;

private:
  LinearAction() = default;
  void build_split(const Tolerances& tol);
  void build_torus(const Tolerances& tol);

  int dim_v_ = 0;
  int dim_k_ = 0;
  std::string name_;
  Tolerances tol_;
  ValidationReport validation_;
  std::vector<Eigen::MatrixXd> g_basis_;  // [k | p], orthonormal w.r.t. inner_g
  Eigen::MatrixXd g_flat_;                // flattened basis as columns
  bool identity_metric_ = true;
  Eigen::MatrixXd metric_sqrt_, metric_sqrt_inv_;
  std::shared_ptr<const CartanSplit> split_;
  std::shared_ptr<const TorusFrame> torus_;
};

/// Cartan decomposition g = k + p in the orthonormal g-basis. The basis
/// ordering of LinearAction makes both factors coordinate slices.
class CartanSplit {
public:
  int dim_k = 0;
  int dim_p = 0;
  /// bracket-relation residuals: [k,p] in p and [p,p] in k
  double bracket_kp_residual = 0.0;
  double bracket_pp_residual = 0.0;
};

/// A maximal torus of exp(p) with a joint eigenbasis of V and the weights.
/// Columns of v_basis are ordered lexicographically by weight row, which is
/// the ordering the Iwasawa factorization needs.
class TorusFrame {
public:
  int dim_t() const { return static_cast<int>(torus_coords.size()); }
  int n() const { return static_cast<int>(weights.rows()); }

  std::vector<Eigen::VectorXd> torus_coords;  ///< t-basis in p-coordinates (orthonormal)
  std::vector<Eigen::MatrixXd> torus_ops;     ///< same elements as operators on V
  Eigen::MatrixXd v_basis;                    ///< orthogonal, columns = eigenbasis
  Eigen::MatrixXd weights;                    ///< row i = weight of v_basis.col(i)
  double diagonalization_residual = 0.0;

  /// coordinates of (internal) v in the eigenbasis
  Eigen::VectorXd frame_coords(const Eigen::VectorXd& v_internal) const {
    return v_basis.transpose() * v_internal;
  }
  Eigen::VectorXd from_frame(const Eigen::VectorXd& coords) const {
    return v_basis * coords;
  }
  /// pairing <lambda, alpha_i> for lambda in t-coordinates
  Eigen::VectorXd pairings(const Eigen::VectorXd& t_coords) const {
    return weights * t_coords;
  }
};

/// One factorization sample from iwasawa_check.
struct IwasawaSample {
  double ktn_residual = 0.0;      ///< |k t n - g| / |g|
  double ktk_residual = 0.0;      ///< |k1 t k2 - g| / |g|
  double t_membership = 0.0;      ///< distance of log t from the torus span
  double n_membership = 0.0;      ///< distance of log n from the algebra
  double p_membership = 0.0;      ///< distance of the polar log from p
  /// K T N factors, expressed in the weight-ordered eigenbasis
  Eigen::MatrixXd k_factor, t_factor, n_factor;
};

struct IwasawaReport {
  std::vector<IwasawaSample> samples;
  double worst_residual = 0.0;
  bool ok = true;
};

/// Diagnostic: factor sample group elements as k t n and k1 t k2 and report
/// reconstruction residuals. Each sample element is given as a product of
/// exponentials of algebra elements (g-basis coordinates).
IwasawaReport iwasawa_check(const LinearAction& action,
                            const std::vector<std::vector<Eigen::VectorXd>>& samples,
                            double tol = 1e-9);

/// Parses the on-disk action description (JSON with fields dim_v, generators,
/// optional inner_v and labels) and validates the reductivity axioms.
LinearAction load_action(const std::string& path, const Tolerances& tol = {});
LinearAction load_action_from_json(const std::string& text, const Tolerances& tol = {});

}  // namespace nullcone
