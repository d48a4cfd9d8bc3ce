#include "nullcone/builtin.hpp"

#include <cmath>
#include <sstream>

#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"

namespace nullcone {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd unit_mat(int n, int i, int j) {
  MatrixXd m = MatrixXd::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

// basis of sl(n): traceless diagonals first so that the greedy torus comes
// out diagonal, then the off-diagonal units
std::vector<MatrixXd> sl_basis(int n) {
  std::vector<MatrixXd> basis;
  for (int i = 0; i + 1 < n; ++i) {
    MatrixXd h = MatrixXd::Zero(n, n);
    h(i, i) = 1.0;
    h(i + 1, i + 1) = -1.0;
    basis.push_back(h);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) basis.push_back(unit_mat(n, i, j));
  return basis;
}

std::vector<MatrixXd> gl_basis(int n) {
  std::vector<MatrixXd> basis;
  for (int i = 0; i < n; ++i) basis.push_back(unit_mat(n, i, i));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) basis.push_back(unit_mat(n, i, j));
  return basis;
}

// operator of X acting on Mat(n) ~ R^{n^2} (row-major) by A -> XA - AX
MatrixXd conjugation_op(const MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  MatrixXd op = MatrixXd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        op(i * n + j, k * n + j) += x(i, k);  // XA
        op(i * n + j, i * n + k) -= x(k, j);  // -AX
      }
    }
  return op;
}

int pair_index(int i, int j, int n) {
  // index of (i, j) with i < j in lexicographic order
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

// operator of X on the bracket coefficients:
// (X.mu)(u, w) = X mu(u, w) - mu(X u, w) - mu(u, X w).
// For the basis tensor (a<b; c) the entry at (i<j; k) is
//   d_{(ij)(ab)} X_kc - d_kc (X_ai d_jb - X_bi d_ja + X_bj d_ia - X_aj d_ib).
MatrixXd bracket_op(const MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  const int npairs = n * (n - 1) / 2;
  const int dim = npairs * n;
  MatrixXd op = MatrixXd::Zero(dim, dim);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const int col = pair_index(a, b, n) * n + c;
        for (int k = 0; k < n; ++k)
          op(pair_index(a, b, n) * n + k, col) += x(k, c);
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            double coef = 0.0;
            if (j == b) coef -= x(a, i);
            if (j == a) coef += x(b, i);
            if (i == a) coef -= x(b, j);
            if (i == b) coef += x(a, j);
            if (coef != 0.0) op(pair_index(i, j, n) * n + c, col) += coef;
          }
      }
  return op;
}

}  // namespace

LinearAction make_scaling_r2() {
  ActionSpec spec;
  spec.dim_v = 2;
  MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  spec.generators = {a};
  spec.name = "scaling-r2";
  return LinearAction::from_spec(spec);
}

LinearAction make_sln_conjugation(int n) {
  if (n < 2 || n > 5)
    throw ValidationError("make_sln_conjugation: n must be between 2 and 5");
  ActionSpec spec;
  spec.dim_v = n * n;
  auto basis = sl_basis(n);
  for (const auto& x : basis) spec.generators.push_back(conjugation_op(x));
  const int m = static_cast<int>(basis.size());
  MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gram(i, j) = (basis[i].array() * basis[j].array()).sum();
  spec.inner_g = gram;
  std::ostringstream os;
  os << "sl-conj:" << n;
  spec.name = os.str();
  return LinearAction::from_spec(spec);
}

LinearAction make_bracket_action(int n, BracketGroup group) {
  if (n < 2 || n > 4)
    throw ValidationError("make_bracket_action: n must be between 2 and 4");
  ActionSpec spec;
  spec.dim_v = BracketTensor::dim(n);
  auto basis = group == BracketGroup::gl ? gl_basis(n) : sl_basis(n);
  for (const auto& x : basis) spec.generators.push_back(bracket_op(x));
  const int m = static_cast<int>(basis.size());
  MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gram(i, j) = (basis[i].array() * basis[j].array()).sum();
  spec.inner_g = gram;
  std::ostringstream os;
  os << "brackets:" << n << ":" << (group == BracketGroup::gl ? "gl" : "sl");
  spec.name = os.str();
  return LinearAction::from_spec(spec);
}

BracketTensor BracketTensor::zero(int n) {
  BracketTensor t;
  t.n = n;
  t.coeffs = VectorXd::Zero(dim(n));
  return t;
}

BracketTensor BracketTensor::from_vector(int n, const Eigen::VectorXd& v) {
  if (v.size() != dim(n))
    throw ValidationError("BracketTensor: coefficient vector has the wrong size");
  BracketTensor t;
  t.n = n;
  t.coeffs = v;
  return t;
}

double BracketTensor::coeff(int i, int j, int k) const {
  if (i == j) return 0.0;
  if (i < j) return coeffs[pair_index(i, j, n) * n + k];
  return -coeffs[pair_index(j, i, n) * n + k];
}

void BracketTensor::set_coeff(int i, int j, int k, double value) {
  if (i >= j) throw ValidationError("BracketTensor::set_coeff needs i < j");
  coeffs[pair_index(i, j, n) * n + k] = value;
}

Eigen::VectorXd BracketTensor::apply(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& y) const {
  VectorXd out = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double c = x[i] * y[j] - x[j] * y[i];
      if (c == 0.0) continue;
      for (int k = 0; k < n; ++k) out[k] += c * coeffs[pair_index(i, j, n) * n + k];
    }
  return out;
}

double jacobi_defect(const BracketTensor& mu) {
  const int n = mu.n;
  double defect = 0.0;
  VectorXd ea = VectorXd::Zero(n), eb = VectorXd::Zero(n), ec = VectorXd::Zero(n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        ea.setZero();
        eb.setZero();
        ec.setZero();
        ea[a] = eb[b] = ec[c] = 1.0;
        VectorXd j = mu.apply(mu.apply(ea, eb), ec) + mu.apply(mu.apply(eb, ec), ea) +
                     mu.apply(mu.apply(ec, ea), eb);
        defect += j.squaredNorm();
      }
  return defect;
}

bool bracket_is_nilpotent(const BracketTensor& mu, double tol) {
  const int n = mu.n;
  const double scale = std::max(mu.coeffs.norm(), 1e-300);
  // lower central series: L_{t+1} = mu(L_t, R^n)
  MatrixXd layer = MatrixXd::Identity(n, n);
  for (int depth = 0; depth <= n + 1; ++depth) {
    // span of mu(layer columns, basis vectors)
    std::vector<VectorXd> images;
    for (int c = 0; c < layer.cols(); ++c)
      for (int b = 0; b < n; ++b) {
        VectorXd eb = VectorXd::Zero(n);
        eb[b] = 1.0;
        VectorXd im = mu.apply(layer.col(c), eb);
        if (im.norm() > tol * scale) images.push_back(im);
      }
    if (images.empty()) return true;
    MatrixXd packed(n, static_cast<int>(images.size()));
    for (std::size_t k = 0; k < images.size(); ++k)
      packed.col(static_cast<int>(k)) = images[k];
    MatrixXd next = detail::orthonormal_columns(packed);
    if (next.cols() >= layer.cols()) return false;  // series stalled above zero
    layer = next;
  }
  return false;
}

NilsolitonReport nilsoliton_residual(const BracketTensor& mu, const FlowOptions& fopts) {
  if (mu.coeffs.norm() == 0.0)
    throw DomainError("nilsoliton_residual: the zero bracket is outside the domain");
  if (jacobi_defect(mu) > 1e-10 * std::max(1.0, mu.coeffs.squaredNorm()))
    throw DomainError("nilsoliton_residual: input does not satisfy the Jacobi identity");
  if (!bracket_is_nilpotent(mu))
    throw DomainError("nilsoliton_residual: input bracket is not nilpotent");

  LinearAction action = make_bracket_action(mu.n, BracketGroup::sl);
  NilsolitonReport rep;
  rep.initial_gradient = grad_energy(mu.coeffs, action).norm();
  rep.soliton_candidate = rep.initial_gradient < 1e-8;
  LabeledFlow lf = stratum_label(mu.coeffs, action, fopts);
  rep.flow = lf.flow;
  rep.label = lf.label;
  rep.limit_gradient = rep.flow.gradient_residual;
  rep.limit_jacobi_defect =
      jacobi_defect(BracketTensor::from_vector(mu.n, rep.flow.limit));
  return rep;
}

LinearAction make_named_action(const std::string& name) {
  if (name == "scaling-r2") return make_scaling_r2();
  if (name.rfind("sl-conj:", 0) == 0) {
    const int n = std::atoi(name.c_str() + 8);
    return make_sln_conjugation(n);
  }
  if (name.rfind("brackets:", 0) == 0) {
    const std::string rest = name.substr(9);
    const auto colon = rest.find(':');
    if (colon != std::string::npos) {
      const int n = std::atoi(rest.substr(0, colon).c_str());
      const std::string grp = rest.substr(colon + 1);
      if (grp == "gl") return make_bracket_action(n, BracketGroup::gl);
      if (grp == "sl") return make_bracket_action(n, BracketGroup::sl);
    }
  }
  throw ValidationError("unknown action name '" + name +
                        "' (expected scaling-r2, sl-conj:<n> or brackets:<n>:<gl|sl>)");
}

}  // namespace nullcone
