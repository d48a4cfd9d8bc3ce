#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nullcone/action.hpp"
#include "nullcone/moment.hpp"

namespace nullcone {

/// Subspaces and subalgebras adapted to a fixed p-element beta: the
/// eigenspaces of beta+ on V and the centralizer/unipotent/parabolic layers
/// of the algebra, all as orthonormal coordinate bases.
struct BetaAdapted {
  Eigen::VectorXd beta_p_coords;
  Eigen::MatrixXd beta_op;       ///< operator on V (internal coordinates)
  double beta_norm = 0.0;

  std::vector<double> v_eigenvalues;        ///< distinct eigenvalues of beta+
  std::vector<Eigen::MatrixXd> v_eigenbases;  ///< orthonormal columns per eigenvalue
  Eigen::MatrixXd v_nonneg;  ///< V^{>=0}: columns span the nonnegative part
  Eigen::MatrixXd v_zero;    ///< V^0 = ker beta+

  std::vector<double> ad_eigenvalues;  ///< distinct eigenvalues of ad(beta) on g
  Eigen::MatrixXd g_beta;  ///< centralizer of beta, coords in the g-basis (columns)
  Eigen::MatrixXd u_beta;  ///< positive ad-eigenspaces
  Eigen::MatrixXd q_beta;  ///< g_beta + u_beta
  Eigen::MatrixXd h_beta;  ///< { A in g_beta : <A, beta> = 0 }
  Eigen::MatrixXd h_beta_p;  ///< p-part of h_beta, coords in the p-basis
};

BetaAdapted beta_adapted(const Eigen::VectorXd& beta_p_coords, const LinearAction& action);

/// Orthogonal projection V^{>=0} -> V^0 (the limit of exp(-t beta+) v).
/// Throws DomainError when v has a component in a negative eigenspace, where
/// the limit diverges.
Eigen::VectorXd project_p_beta(const Eigen::VectorXd& v, const BetaAdapted& adapted,
                               const LinearAction& action);

/// Canonical stratum label: the moment value at a flow limit, identified by
/// its operator spectrum (sorted when canonicalize is on, which is the
/// conjugation-complete invariant; off for torus actions with trivial K).
struct StratumLabel {
  Eigen::VectorXd spectrum;        ///< eigenvalues of the operator on V
  double norm = 0.0;               ///< |beta| in the algebra inner product
  Eigen::MatrixXd representative;  ///< diag(spectrum) when canonicalized
  bool canonicalized = true;
};

struct LabelOptions {
  bool sort_spectrum = true;   ///< disable for torus actions (trivial K)
  double spectrum_tol = 1e-7;  ///< labels closer than this are identified
};

bool labels_equal(const StratumLabel& a, const StratumLabel& b, double tol = 1e-7);
double label_distance(const StratumLabel& a, const StratumLabel& b);

/// One enumerated candidate with the weight subset that produced it.
struct CandidateLabel {
  StratumLabel label;
  Eigen::VectorXd beta_t_coords;     ///< min-norm point in torus coordinates
  Eigen::VectorXd beta_p_coords;     ///< the same element in p-coordinates
  std::vector<int> weight_subset;    ///< indices into distinct_weights
};

struct CandidateLabels {
  std::vector<CandidateLabel> confirmed;    ///< aligned with the critical equations
  std::vector<CandidateLabel> unconfirmed;  ///< min-norm points failing alignment
  std::vector<Eigen::VectorXd> distinct_weights;
};

struct CandidateOptions {
  LabelOptions label;
  int max_distinct_weights = 22;
  /// optional explicit supports (indices into the distinct weights) replacing
  /// full subset enumeration
  std::optional<std::vector<std::vector<int>>> supports;
};

/// Finite candidate set for the stratum labels: min-norm points of weight
/// subsets whose active set lies on the critical sphere. Throws CapExceeded
/// past the enumeration cap unless explicit supports are given.
CandidateLabels candidate_labels(const LinearAction& action,
                                 const CandidateOptions& opts = {});

struct LabeledFlow {
  StratumLabel label;
  FlowResult flow;
  MomentValue limit_moment;
};

/// Stratum label of v via the negative gradient flow of the energy map.
LabeledFlow stratum_label(const Eigen::VectorXd& v, const LinearAction& action,
                          const FlowOptions& fopts = {}, const LabelOptions& lopts = {});

enum class DescentStatus { semistable, null, stalled };

struct DescentOptions {
  double moment_tol = 1e-10;    ///< |m| below this ends in `semistable`
  double norm_floor = 1e-12;    ///< |v| below floor * |v0| ends in `null`
  /// a "minimal vector" this far below the input scale is rounding debris of
  /// a null-cone member: double precision balances the decaying components
  /// against eps-level contamination near eps^{1/d} along a depth-d chain
  double collapse_ratio = 1e-4;
  long max_iterations = 20000;
};

struct DescentResult {
  DescentStatus status = DescentStatus::stalled;
  Eigen::VectorXd vector;      ///< final iterate (minimal vector when semistable)
  double moment_norm = 0.0;    ///< |m| at the final iterate (restricted moment
                               ///  when a restricted generator set is active)
  double norm_ratio = 0.0;     ///< |v| / |v0|
  long iterations = 0;
};

/// Steepest norm descent v <- exp(-s m(v)) v with exact line search along
/// each one-parameter subgroup. Ends at a minimal vector of the orbit
/// closure (semistable) or detects null-cone membership by norm collapse.
/// `restricted_p` (columns, p-coordinates) restricts the moment to a
/// subalgebra's p-part, which is how the H_beta action is driven.
DescentResult minimal_vector_descent(const Eigen::VectorXd& v, const LinearAction& action,
                                     const DescentOptions& opts = {},
                                     const Eigen::MatrixXd* restricted_p = nullptr);

struct SemistableResult {
  bool semistable = false;
  DescentResult descent;
  double full_moment_discrepancy = 0.0;  ///< |m(limit) - beta|, Lemma-consistency
};

/// H_beta-semistability of v0 in V^0 by restricted moment descent.
SemistableResult is_semistable_for_hbeta(const Eigen::VectorXd& v0,
                                         const BetaAdapted& adapted,
                                         const LinearAction& action,
                                         const DescentOptions& opts = {});

struct MembershipReport {
  bool by_flow = false;
  std::optional<bool> by_algebraic;  ///< p_beta(v) semistable, when v lies in V^{>=0}
  bool consistent = true;
  StratumLabel flow_label;
};

/// Does v belong to the stratum of `label`? Flow comparison always runs; the
/// algebraic criterion is cross-checked when v lies in the V^{>=0} slice of
/// the flow limit's beta.
MembershipReport membership_in_stratum(const Eigen::VectorXd& v, const StratumLabel& label,
                                       const LinearAction& action,
                                       const FlowOptions& fopts = {},
                                       const LabelOptions& lopts = {});

struct EstimateReport {
  double moment_sq = 0.0;   ///< |m(v)|^2
  double pairing = 0.0;     ///< <m(v), beta>
  double beta_sq = 0.0;     ///< |beta|^2
  bool ok = false;
  bool equality = false;
  bool equality_consistent = true;  ///< equality forces v in V^0 and m(v) = beta
};

/// Checks |m(v)|^2 >= <m(v), beta> >= |beta|^2 for v in V^{>=0} \ {0}.
/// An inequality violation beyond tolerance throws (implementation bug).
EstimateReport estimate_check(const Eigen::VectorXd& v, const BetaAdapted& adapted,
                              const LinearAction& action, double tol = 1e-8);

enum class QbetaClass { centralizer, parabolic, outside, undetermined };

struct QbetaReport {
  QbetaClass cls = QbetaClass::undetermined;
  double growth_exponent = 0.0;   ///< estimated exponential rate of the conjugate
  Eigen::MatrixXd limit;          ///< limit of the conjugation when it exists
  bool limit_is_identity = false;
};

/// Classifies a group element (a product of exponentials of algebra
/// elements) against the parabolic subgroup attached to beta by evaluating
/// exp(-t beta) g exp(t beta) on a geometric t-schedule.
QbetaReport q_beta_membership(const std::vector<Eigen::VectorXd>& exp_factors,
                              const Eigen::VectorXd& beta_p_coords,
                              const LinearAction& action);

}  // namespace nullcone
