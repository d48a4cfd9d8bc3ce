#include "nullcone/action.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"

namespace nullcone {

using detail::flatten;
using detail::unflatten;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd commutator(const MatrixXd& a, const MatrixXd& b) { return a * b - b * a; }

// lexicographic weight-row comparison with tolerance
bool lex_less(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double tol) {
  for (int j = 0; j < a.size(); ++j) {
    if (a[j] < b[j] - tol) return true;
    if (a[j] > b[j] + tol) return false;
  }
  return false;
}

}  // namespace

bool LinearAction::abelian() const { return dim_k_ == 0; }

Eigen::MatrixXd LinearAction::algebra_op(const Eigen::VectorXd& g_coords) const {
  MatrixXd op = MatrixXd::Zero(dim_v_, dim_v_);
  for (int a = 0; a < dim_g(); ++a) op += g_coords[a] * g_basis_[a];
  return op;
}

Eigen::MatrixXd LinearAction::p_element_op(const Eigen::VectorXd& p_coords) const {
  MatrixXd op = MatrixXd::Zero(dim_v_, dim_v_);
  for (int j = 0; j < dim_p(); ++j) op += p_coords[j] * g_basis_[dim_k_ + j];
  return op;
}

Eigen::VectorXd LinearAction::algebra_coords(const Eigen::MatrixXd& op,
                                             double* residual) const {
  if (dim_g() == 0) {
    if (residual) *residual = flatten(op).norm();
    return VectorXd(0);
  }
  VectorXd rhs = flatten(op);
  VectorXd c = g_flat_.colPivHouseholderQr().solve(rhs);
  if (residual) *residual = (g_flat_ * c - rhs).norm();
  return c;
}

Eigen::VectorXd LinearAction::to_internal(const Eigen::VectorXd& v) const {
  return identity_metric_ ? v : VectorXd(metric_sqrt_ * v);
}

Eigen::VectorXd LinearAction::from_internal(const Eigen::VectorXd& v) const {
  return identity_metric_ ? v : VectorXd(metric_sqrt_inv_ * v);
}

Eigen::MatrixXd LinearAction::op_from_internal(const Eigen::MatrixXd& op) const {
  return identity_metric_ ? op : MatrixXd(metric_sqrt_inv_ * op * metric_sqrt_);
}

const CartanSplit& LinearAction::split() const { return *split_; }
const TorusFrame& LinearAction::torus() const { return *torus_; }

LinearAction LinearAction::from_spec(const ActionSpec& spec, const Tolerances& tol) {
  LinearAction act;
  act.tol_ = tol;
  act.name_ = spec.name;
  act.dim_v_ = spec.dim_v;
  const int n = spec.dim_v;
  if (n <= 0) throw ValidationError("action spec: dim_v must be positive");
  for (std::size_t i = 0; i < spec.generators.size(); ++i) {
    if (spec.generators[i].rows() != n || spec.generators[i].cols() != n) {
      std::ostringstream os;
      os << "action spec: generator " << i << " is not " << n << "x" << n;
      throw ValidationError(os.str());
    }
  }

  // metric on V
  act.identity_metric_ = true;
  if (spec.inner_v) {
    const MatrixXd& m = *spec.inner_v;
    if (m.rows() != n || m.cols() != n ||
        (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      throw ValidationError("action spec: inner_v must be a symmetric dim_v x dim_v matrix");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.eigenvalues().minCoeff() <= 0)
      throw ValidationError("action spec: inner_v is not positive definite");
    if ((m - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-14) {
      act.identity_metric_ = false;
      act.metric_sqrt_ = es.operatorSqrt();
      act.metric_sqrt_inv_ = es.operatorInverseSqrt();
    }
  }

  // internal coordinates
  const int m = static_cast<int>(spec.generators.size());
  std::vector<MatrixXd> gens(m);
  for (int i = 0; i < m; ++i) {
    gens[i] = act.identity_metric_
                  ? spec.generators[i]
                  : MatrixXd(act.metric_sqrt_ * spec.generators[i] * act.metric_sqrt_inv_);
  }

  // linear independence
  if (m > 0) {
    MatrixXd flat(n * n, m);
    for (int i = 0; i < m; ++i) flat.col(i) = flatten(gens[i]);
    Eigen::JacobiSVD<MatrixXd> svd(flat);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-10 * sv[0])
      throw ValidationError("action spec: generators are linearly dependent");
  }

  // algebra inner product
  MatrixXd gram(m, m);
  if (spec.inner_g) {
    if (spec.inner_g->rows() != m || spec.inner_g->cols() != m)
      throw ValidationError("action spec: inner_g Gram matrix has wrong size");
    gram = *spec.inner_g;
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) gram(i, j) = (gens[i].array() * gens[j].array()).sum();
  }
  Eigen::LLT<MatrixXd> llt(gram);
  if (m > 0 && llt.info() != Eigen::Success)
    throw ValidationError("action spec: inner_g is not positive definite");

  // orthonormal basis for inner_g
  std::vector<MatrixXd> basis(m);
  if (m > 0) {
    MatrixXd linv = llt.matrixL().solve(MatrixXd::Identity(m, m));
    for (int a = 0; a < m; ++a) {
      basis[a] = MatrixXd::Zero(n, n);
      for (int i = 0; i <= a; ++i) basis[a] += linv(a, i) * gens[i];
    }
  }

  MatrixXd flat_basis(n * n, m);
  for (int a = 0; a < m; ++a) flat_basis.col(a) = flatten(basis[a]);
  auto span_res = [&](const MatrixXd& op) {
    if (m == 0) return flatten(op).norm();
    VectorXd rhs = flatten(op);
    VectorXd c = flat_basis.colPivHouseholderQr().solve(rhs);
    return (flat_basis * c - rhs).norm();
  };

  // transpose closure (self-adjoint algebra)
  for (int i = 0; i < m; ++i) {
    const double r = span_res(gens[i].transpose());
    const double scale = std::max(gens[i].norm(), 1e-300);
    if (r / scale > act.validation_.transpose_residual) {
      act.validation_.transpose_residual = r / scale;
      act.validation_.worst_generator = i;
    }
  }
  if (act.validation_.transpose_residual > tol.algebra_tol) {
    std::ostringstream os;
    os << "algebra is not closed under transpose: generator "
       << act.validation_.worst_generator << " has relative residual "
       << act.validation_.transpose_residual;
    throw ValidationError(os.str());
  }

  // bracket closure
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      MatrixXd br = commutator(basis[a], basis[b]);
      const double r = span_res(br) / std::max(basis[a].norm() * basis[b].norm(), 1e-300);
      if (r > act.validation_.bracket_residual) {
        act.validation_.bracket_residual = r;
        act.validation_.worst_generator = a;
      }
    }
  }
  if (act.validation_.bracket_residual > tol.algebra_tol) {
    std::ostringstream os;
    os << "algebra is not closed under brackets: worst pair involves basis element "
       << act.validation_.worst_generator << ", relative residual "
       << act.validation_.bracket_residual;
    throw ValidationError(os.str());
  }

  // Cartan split: transpose closure puts both parts of every basis element
  // back into the algebra
  std::vector<VectorXd> k_coords, p_coords;
  auto coords_of = [&](const MatrixXd& op) {
    return VectorXd(flat_basis.colPivHouseholderQr().solve(flatten(op)));
  };
  for (int a = 0; a < m; ++a) {
    MatrixXd skew = 0.5 * (basis[a] - basis[a].transpose());
    MatrixXd sym = 0.5 * (basis[a] + basis[a].transpose());
    if (skew.norm() > 1e-14 * std::max(1.0, basis[a].norm()))
      k_coords.push_back(coords_of(skew));
    if (sym.norm() > 1e-14 * std::max(1.0, basis[a].norm()))
      p_coords.push_back(coords_of(sym));
  }
  auto pack = [&](const std::vector<VectorXd>& vs) {
    MatrixXd out(m, static_cast<int>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) out.col(static_cast<int>(j)) = vs[j];
    return detail::orthonormal_columns(out);
  };
  MatrixXd kc = pack(k_coords), pc = pack(p_coords);
  act.dim_k_ = static_cast<int>(kc.cols());
  const int dim_p = static_cast<int>(pc.cols());
  if (act.dim_k_ + dim_p != m)
    throw ValidationError("Cartan split dimensions do not add up; inner products are inconsistent");

  act.g_basis_.clear();
  auto op_of_coords = [&](const VectorXd& c) {
    MatrixXd op = MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) op += c[i] * basis[i];
    return op;
  };
  for (int a = 0; a < act.dim_k_; ++a) act.g_basis_.push_back(op_of_coords(kc.col(a)));
  for (int j = 0; j < dim_p; ++j) act.g_basis_.push_back(op_of_coords(pc.col(j)));
  act.g_flat_.resize(n * n, m);
  for (int a = 0; a < m; ++a) act.g_flat_.col(a) = flatten(act.g_basis_[a]);

  // k ⊥ p under inner_g: Gram of the reordered basis must be the identity
  if (m > 0) {
    MatrixXd cc(m, m);
    for (int a = 0; a < act.dim_k_; ++a) cc.col(a) = kc.col(a);
    for (int j = 0; j < dim_p; ++j) cc.col(act.dim_k_ + j) = pc.col(j);
    MatrixXd gram_new = cc.transpose() * cc;  // basis was orthonormal already
    act.validation_.kp_orthogonality =
        (gram_new - MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
    if (act.validation_.kp_orthogonality > tol.algebra_tol)
      throw ValidationError("inner_g does not make k orthogonal to p");
  }

  act.build_split(tol);
  act.build_torus(tol);
  return act;
}

void LinearAction::build_split(const Tolerances& tol) {
  const int m = dim_g();
  auto split = std::make_shared<CartanSplit>();
  split->dim_k = dim_k_;
  split->dim_p = m - dim_k_;

  // compatibility: ad(X) skew for X in k, symmetric for X in p
  double worst = 0.0;
  for (int x = 0; x < m; ++x) {
    MatrixXd ad(m, m);
    for (int b = 0; b < m; ++b) {
      double r = 0.0;
      ad.col(b) = algebra_coords(commutator(g_basis_[x], g_basis_[b]), &r);
      worst = std::max(worst, r);
    }
    const double scale = std::max(1.0, ad.cwiseAbs().maxCoeff());
    const MatrixXd defect = (x < dim_k_) ? MatrixXd(ad + ad.transpose())
                                         : MatrixXd(ad - ad.transpose());
    validation_.compatibility_residual =
        std::max(validation_.compatibility_residual, defect.cwiseAbs().maxCoeff() / scale);
  }
  if (validation_.compatibility_residual > tol.algebra_tol)
    throw ValidationError("inner_g violates the adjoint compatibility condition");

  // bracket relations of the split
  for (int a = dim_k_; a < m; ++a) {
    for (int b = dim_k_; b < m; ++b) {
      VectorXd c = algebra_coords(commutator(g_basis_[a], g_basis_[b]));
      split->bracket_pp_residual =
          std::max(split->bracket_pp_residual, c.tail(m - dim_k_).norm());
    }
    for (int x = 0; x < dim_k_; ++x) {
      VectorXd c = algebra_coords(commutator(g_basis_[x], g_basis_[a]));
      split->bracket_kp_residual =
          std::max(split->bracket_kp_residual, c.head(dim_k_).norm());
    }
  }
  split_ = split;
}

void LinearAction::build_torus(const Tolerances& tol) {
  const int n = dim_v_;
  const int dp = dim_p();
  auto frame = std::make_shared<TorusFrame>();

  // greedy maximal abelian subalgebra of p
  std::vector<VectorXd> t_coords;  // p-coordinates
  while (true) {
    // centralizer of the current torus inside p, minus the torus itself
    MatrixXd constraints(n * n * static_cast<int>(t_coords.size()), dp);
    for (std::size_t ti = 0; ti < t_coords.size(); ++ti) {
      MatrixXd top = p_element_op(t_coords[ti]);
      for (int j = 0; j < dp; ++j)
        constraints.block(static_cast<int>(ti) * n * n, j, n * n, 1) =
            flatten(commutator(top, g_basis_[dim_k_ + j]));
    }
    MatrixXd cent = t_coords.empty() ? MatrixXd::Identity(dp, dp)
                                     : detail::nullspace(constraints);
    // remove the torus directions
    for (auto& tc : t_coords)
      for (int c = 0; c < cent.cols(); ++c)
        cent.col(c) -= tc.dot(cent.col(c)) * tc;
    cent = detail::orthonormal_columns(cent, 1e-9);
    if (cent.cols() == 0) break;
    t_coords.push_back(cent.col(0));
  }

  frame->torus_coords = t_coords;
  for (const auto& tc : t_coords) frame->torus_ops.push_back(p_element_op(tc));

  // joint eigenbasis
  if (frame->torus_ops.empty()) {
    frame->v_basis = MatrixXd::Identity(n, n);
    frame->weights = MatrixXd::Zero(n, 0);
  } else {
    double comm_res = 0.0;
    for (std::size_t a = 0; a < frame->torus_ops.size(); ++a)
      for (std::size_t b = a + 1; b < frame->torus_ops.size(); ++b)
        comm_res = std::max(
            comm_res, commutator(frame->torus_ops[a], frame->torus_ops[b]).norm());
    auto sd = detail::simultaneous_diagonalize(frame->torus_ops, tol.cluster_tol);
    frame->v_basis = sd.q;
    frame->weights = sd.eigenvals;
    frame->diagonalization_residual = sd.residual;
    double scale = 1.0;
    for (const auto& op : frame->torus_ops)
      scale = std::max(scale, op.cwiseAbs().maxCoeff());
    if (sd.residual > 1e-6 * scale) {
      std::ostringstream os;
      os << "failed simultaneous diagonalization of the torus (off-diagonal residual "
         << sd.residual << ", commutator residual " << comm_res << ")";
      throw ConvergenceError(os.str(), sd.residual);
    }
  }

  // order the eigenbasis lexicographically by weight
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  const double lex_tol = 1e-9;
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    return lex_less(frame->weights.row(a), frame->weights.row(b), lex_tol);
  });
  MatrixXd vb(n, n), w(n, frame->weights.cols());
  for (int i = 0; i < n; ++i) {
    vb.col(i) = frame->v_basis.col(perm[i]);
    w.row(i) = frame->weights.row(perm[i]);
  }
  frame->v_basis = vb;
  frame->weights = w;
  torus_ = frame;
}

IwasawaReport iwasawa_check(const LinearAction& action,
                            const std::vector<std::vector<Eigen::VectorXd>>& samples,
                            double tol) {
  const auto& frame = action.torus();
  const int n = action.dim_v();
  IwasawaReport report;

  // torus span in V-operator form, for membership tests of log t
  MatrixXd wmat = frame.weights;  // n x dim_t

  for (const auto& factors : samples) {
    MatrixXd g = MatrixXd::Identity(n, n);
    for (const auto& coords : factors) g = g * detail::expm(action.algebra_op(coords));

    IwasawaSample s;
    const double gscale = std::max(g.norm(), 1e-300);

    // --- K T N, in the weight-ordered eigenbasis ---
    MatrixXd m = frame.v_basis.transpose() * g * frame.v_basis;
    // "QL": flip, QR, flip back, so L is lower triangular with positive diagonal
    MatrixXd flip = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) flip(i, n - 1 - i) = 1.0;
    Eigen::HouseholderQR<MatrixXd> qr(flip * m * flip);
    MatrixXd q = qr.householderQ();
    MatrixXd r = q.transpose() * (flip * m * flip);
    for (int i = 0; i < n; ++i) {
      if (r(i, i) < 0) {
        r.row(i) = -r.row(i);
        q.col(i) = -q.col(i);
      }
    }
    MatrixXd k = flip * q * flip;
    MatrixXd l = flip * r * flip;
    VectorXd logdiag(n);
    for (int i = 0; i < n; ++i) logdiag[i] = std::log(std::max(l(i, i), 1e-300));
    // log t must be a pairing vector <tau, alpha_i>
    VectorXd tau = wmat.cols() > 0 ? VectorXd(wmat.colPivHouseholderQr().solve(logdiag))
                                   : VectorXd(0);
    s.t_membership = wmat.cols() > 0 ? (wmat * tau - logdiag).norm() : logdiag.norm();
    MatrixXd tmat = logdiag.array().exp().matrix().asDiagonal();
    MatrixXd nmat = tmat.inverse() * l;
    double nres = 0.0;
    MatrixXd logn = detail::log_unitriangular(nmat);
    action.algebra_coords(frame.v_basis * logn * frame.v_basis.transpose(), &nres);
    s.n_membership = nres / std::max(1.0, logn.norm());
    s.ktn_residual = (k * tmat * nmat - m).norm() / gscale;
    s.k_factor = k;
    s.t_factor = tmat;
    s.n_factor = nmat;

    // --- K T K via polar + conjugation of the p-part into the torus ---
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.transpose() * g);
    VectorXd pd = es.eigenvalues();
    MatrixXd u = es.eigenvectors();
    MatrixXd sp = u * pd.array().sqrt().log().matrix().asDiagonal() * u.transpose();
    double pres = 0.0;
    action.algebra_coords(sp, &pres);
    s.p_membership = pres / std::max(1.0, sp.norm());
    MatrixXd qpol = g * (u * pd.array().rsqrt().matrix().asDiagonal() * u.transpose());

    // double-bracket iteration driving sp into the torus
    MatrixXd h2 = MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < frame.torus_ops.size(); ++j)
      h2 += (1.0 / std::sqrt(2.0 + static_cast<double>(j))) * frame.torus_ops[j];
    MatrixXd x = sp;
    MatrixXd kconj = MatrixXd::Identity(n, n);
    double step = 1.0;
    for (int it = 0; it < 5000 && frame.dim_t() > 0; ++it) {
      MatrixXd z = commutator(h2, x);
      const double zn = z.norm();
      if (zn < 1e-13 * std::max(1.0, x.norm())) break;
      const double f0 = (x.array() * h2.array()).sum();
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        MatrixXd rot = detail::expm(MatrixXd(-step * z));
        MatrixXd xn = rot * x * rot.transpose();
        if ((xn.array() * h2.array()).sum() < f0 - 0.1 * step * zn * zn) {
          x = xn;
          kconj = rot * kconj;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      step = std::min(step * 2.0, 1e3);
    }
    // x should now commute with the torus; recover exp and reassemble
    MatrixXd texp = detail::expm(x);
    MatrixXd k1 = qpol * kconj.transpose();
    s.ktk_residual = (k1 * texp * kconj - g).norm() / gscale;

    report.worst_residual = std::max({report.worst_residual, s.ktn_residual,
                                      s.ktk_residual, s.t_membership, s.n_membership,
                                      s.p_membership});
    report.samples.push_back(s);
  }
  report.ok = report.worst_residual < tol;
  return report;
}

namespace {

ActionSpec parse_action_json(const nlohmann::json& j) {
  ActionSpec spec;
  if (!j.contains("dim_v") || !j["dim_v"].is_number_integer())
    throw ValidationError("action file: missing integer field 'dim_v'");
  spec.dim_v = j["dim_v"].get<int>();
  if (spec.dim_v <= 0) throw ValidationError("action file: dim_v must be positive");
  const int n = spec.dim_v;
  if (!j.contains("generators") || !j["generators"].is_array())
    throw ValidationError("action file: missing list field 'generators'");
  for (const auto& g : j["generators"]) {
    if (!g.is_array() || static_cast<int>(g.size()) != n * n)
      throw ValidationError("action file: each generator must be a row-major list of dim_v^2 numbers");
    VectorXd v(n * n);
    for (int i = 0; i < n * n; ++i) v[i] = g[i].get<double>();
    spec.generators.push_back(unflatten(v, n, n));
  }
  if (j.contains("inner_v")) {
    const auto& iv = j["inner_v"];
    if (!iv.is_array() || static_cast<int>(iv.size()) != n * n)
      throw ValidationError("action file: inner_v must be a row-major list of dim_v^2 numbers");
    VectorXd v(n * n);
    for (int i = 0; i < n * n; ++i) v[i] = iv[i].get<double>();
    spec.inner_v = unflatten(v, n, n);
  }
  if (j.contains("labels")) {
    for (const auto& s : j["labels"]) spec.labels.push_back(s.get<std::string>());
  }
  if (j.contains("name")) spec.name = j["name"].get<std::string>();
  return spec;
}

}  // namespace

LinearAction load_action_from_json(const std::string& text, const Tolerances& tol) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("action file: JSON parse failure: ") + e.what());
  }
  return LinearAction::from_spec(parse_action_json(j), tol);
}

LinearAction load_action(const std::string& path, const Tolerances& tol) {
  std::ifstream in(path);
  if (!in) throw ValidationError("action file: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  LinearAction act = load_action_from_json(ss.str(), tol);
  return act;
}

}  // namespace nullcone
