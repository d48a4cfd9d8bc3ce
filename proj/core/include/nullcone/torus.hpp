#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nullcone/action.hpp"
#include "nullcone/minnorm.hpp"

namespace nullcone {

/// Support of a vector in the torus eigenbasis: indices of coordinates above
/// the support threshold, with their signs.
struct SupportSet {
  std::vector<int> indices;
  std::vector<int> signs;  ///< entry i: sign of coordinate i (0 off the support)
};

SupportSet orbit_support(const Eigen::VectorXd& v, const LinearAction& action);

/// Closedness of the torus orbit of v: true iff 0 lies in the relative
/// interior of the weight hull of the support (0 itself counts as closed).
bool is_orbit_closed(const Eigen::VectorXd& v, const LinearAction& action);

/// A one-parameter subgroup direction that degenerates a non-closed orbit.
struct Destabilizer {
  Eigen::VectorXd direction_t;    ///< unit direction in t-coordinates
  Eigen::MatrixXd direction_op;   ///< the same element as an operator on V
  Eigen::VectorXd limit;          ///< exact limit of exp(s a) v as s -> inf
  std::vector<int> kept_indices;  ///< support indices surviving in the limit
};

/// Direction built from the min-norm point of the support weights (with the
/// minimal-face projection when 0 sits on the hull boundary). Throws
/// DomainError on a closed orbit.
Destabilizer destabilizing_direction(const Eigen::VectorXd& v, const LinearAction& action);

struct TorusMinimal {
  Eigen::VectorXd vector;
  Eigen::VectorXd log_parameter;  ///< lambda in t-coordinates with v_min = exp(lambda) v
  double criticality_residual;    ///< max_j |<X_j v, v>| / |v|^2 over the t-basis
  int newton_iterations;
};

/// Norm minimizer on a closed torus orbit, by damped Newton on the convex
/// log-coordinate energy. Throws DomainError on a non-closed orbit (use
/// closed_orbit_in_closure instead) and on v = 0.
TorusMinimal minimal_vector_torus(const Eigen::VectorXd& v, const LinearAction& action);

/// Representative of the unique closed orbit inside the closure of T.v:
/// destabilize until the support is admissible, then minimize the norm.
Eigen::VectorXd closed_orbit_in_closure(const Eigen::VectorXd& v, const LinearAction& action);

/// One invariant function f_w^sigma: v -> prod (sigma_i v_i)^{w_i} on the
/// matching orthant of the support, 0 elsewhere.
struct SeparationFunction {
  std::vector<int> support;        ///< indices I
  Eigen::VectorXd exponents;       ///< w, size N, supported on I, entries sum to 1
  std::vector<int> signs;          ///< sigma, +-1 on I, 0 elsewhere
};

struct SeparationFamily {
  std::vector<SeparationFunction> functions;
  int n = 0;
  std::size_t admissible_supports = 0;
};

struct FamilyOptions {
  int max_distinct_weights = 22;         ///< enumeration cap (after dedup)
  std::size_t max_functions = 2000000;   ///< hard cap on |family|
};

/// Enumerates every admissible support and builds the positive bases B_I of
/// V_I ∩ ker(phi)^T together with all sign patterns on the support.
/// Throws CapExceeded past the enumeration caps.
SeparationFamily separation_family(const LinearAction& action, const FamilyOptions& opts = {});

/// Evaluates the whole family at v. Positively homogeneous of degree 1 and
/// invariant under the torus action.
Eigen::VectorXd evaluate_phi(const Eigen::VectorXd& v, const SeparationFamily& family,
                             const LinearAction& action);

/// True iff the closed orbit in the closure of T.v is the origin. When a
/// family is supplied, cross-checks against Phi(v) = 0 and reports through
/// phi_discrepancy (if non-null).
bool is_in_null_cone_torus(const Eigen::VectorXd& v, const LinearAction& action,
                           const SeparationFamily* family = nullptr,
                           bool* phi_discrepancy = nullptr);

}  // namespace nullcone
