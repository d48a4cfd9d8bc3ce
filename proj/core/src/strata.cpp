#include "nullcone/strata.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"
#include "nullcone/minnorm.hpp"

namespace nullcone {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// eigenvalue clustering: returns (value, orthonormal basis) pairs in
// ascending order
std::vector<std::pair<double, MatrixXd>> cluster_eigs(const MatrixXd& sym, double tol) {
  const int n = static_cast<int>(sym.rows());
  std::vector<std::pair<double, MatrixXd>> out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sym + sym.transpose()));
  const VectorXd& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1.0);
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || ev[i] - ev[i - 1] > tol * scale) {
      MatrixXd basis = es.eigenvectors().middleCols(start, i - start);
      double val = ev.segment(start, i - start).mean();
      out.emplace_back(val, std::move(basis));
      start = i;
    }
  }
  return out;
}

}  // namespace

BetaAdapted beta_adapted(const Eigen::VectorXd& beta_p_coords, const LinearAction& action) {
  BetaAdapted out;
  out.beta_p_coords = beta_p_coords;
  out.beta_norm = beta_p_coords.norm();
  out.beta_op = action.p_element_op(beta_p_coords);
  const int n = action.dim_v();
  const double ctol = action.tolerances().cluster_tol;

  MatrixXd bplus = out.beta_op - out.beta_norm * out.beta_norm * MatrixXd::Identity(n, n);
  auto vclusters = cluster_eigs(bplus, ctol);
  const double vscale = std::max(bplus.cwiseAbs().maxCoeff(), 1.0);
  int nn_count = 0, zero_count = 0;
  for (auto& [val, basis] : vclusters) {
    const bool is_zero = std::abs(val) <= ctol * vscale;
    out.v_eigenvalues.push_back(is_zero ? 0.0 : val);
    out.v_eigenbases.push_back(basis);
    if (is_zero || val > 0) nn_count += static_cast<int>(basis.cols());
    if (is_zero) zero_count += static_cast<int>(basis.cols());
  }
  out.v_nonneg.resize(n, nn_count);
  out.v_zero.resize(n, zero_count);
  int cn = 0, cz = 0;
  for (std::size_t k = 0; k < out.v_eigenvalues.size(); ++k) {
    const auto& basis = out.v_eigenbases[k];
    if (out.v_eigenvalues[k] >= 0.0) {
      out.v_nonneg.middleCols(cn, basis.cols()) = basis;
      cn += static_cast<int>(basis.cols());
    }
    if (out.v_eigenvalues[k] == 0.0) {
      out.v_zero.middleCols(cz, basis.cols()) = basis;
      cz += static_cast<int>(basis.cols());
    }
  }

  // ad(beta) on the algebra
  const int m = action.dim_g();
  MatrixXd ad(m, m);
  for (int b = 0; b < m; ++b)
    ad.col(b) = action.algebra_coords(out.beta_op * action.g_basis()[b] -
                                      action.g_basis()[b] * out.beta_op);
  auto gclusters = cluster_eigs(ad, ctol);
  const double gscale = m > 0 ? std::max(ad.cwiseAbs().maxCoeff(), 1.0) : 1.0;
  int g0 = 0, gu = 0;
  for (auto& [val, basis] : gclusters) {
    const bool is_zero = std::abs(val) <= ctol * gscale;
    out.ad_eigenvalues.push_back(is_zero ? 0.0 : val);
    if (is_zero)
      g0 += static_cast<int>(basis.cols());
    else if (val > 0)
      gu += static_cast<int>(basis.cols());
  }
  out.g_beta.resize(m, g0);
  out.u_beta.resize(m, gu);
  int ck = 0, cu = 0;
  for (std::size_t k = 0; k < gclusters.size(); ++k) {
    const auto& basis = gclusters[k].second;
    if (out.ad_eigenvalues[k] == 0.0) {
      out.g_beta.middleCols(ck, basis.cols()) = basis;
      ck += static_cast<int>(basis.cols());
    } else if (out.ad_eigenvalues[k] > 0.0) {
      out.u_beta.middleCols(cu, basis.cols()) = basis;
      cu += static_cast<int>(basis.cols());
    }
  }
  out.q_beta.resize(m, g0 + gu);
  out.q_beta << out.g_beta, out.u_beta;

  // h_beta: the orthogonal complement of beta inside g_beta
  VectorXd beta_g = VectorXd::Zero(m);
  beta_g.tail(action.dim_p()) = beta_p_coords;
  if (out.beta_norm < 1e-14) {
    out.h_beta = out.g_beta;
  } else {
    const VectorXd bhat = beta_g / beta_g.norm();
    MatrixXd h = out.g_beta;
    for (int c = 0; c < h.cols(); ++c) h.col(c) -= bhat.dot(h.col(c)) * bhat;
    out.h_beta = detail::orthonormal_columns(h);
  }

  // p-part of h_beta: combinations with vanishing k-component
  if (out.h_beta.cols() > 0) {
    MatrixXd combos;
    if (action.dim_k() > 0) {
      MatrixXd ktop = out.h_beta.topRows(action.dim_k());
      combos = detail::nullspace(ktop);
    } else {
      combos = MatrixXd::Identity(out.h_beta.cols(), out.h_beta.cols());
    }
    MatrixXd pc = (out.h_beta * combos).bottomRows(action.dim_p());
    out.h_beta_p = detail::orthonormal_columns(pc);
  } else {
    out.h_beta_p.resize(action.dim_p(), 0);
  }
  return out;
}

Eigen::VectorXd project_p_beta(const Eigen::VectorXd& v, const BetaAdapted& adapted,
                               const LinearAction& action) {
  const VectorXd vi = action.to_internal(v);
  double neg = 0.0;
  for (std::size_t k = 0; k < adapted.v_eigenvalues.size(); ++k) {
    if (adapted.v_eigenvalues[k] < 0.0)
      neg += (adapted.v_eigenbases[k].transpose() * vi).squaredNorm();
  }
  neg = std::sqrt(neg);
  if (neg > 1e-8 * std::max(vi.norm(), 1e-300)) {
    std::ostringstream os;
    os << "project_p_beta: v has a negative-eigenspace component of norm " << neg
       << "; the limit exp(-t beta+) v diverges";
    throw DomainError(os.str());
  }
  return action.from_internal(detail::project_onto(adapted.v_zero, vi));
}

bool labels_equal(const StratumLabel& a, const StratumLabel& b, double tol) {
  return label_distance(a, b) < tol;
}

double label_distance(const StratumLabel& a, const StratumLabel& b) {
  if (a.spectrum.size() != b.spectrum.size())
    return std::numeric_limits<double>::infinity();
  double d = std::abs(a.norm - b.norm);
  if (a.spectrum.size() > 0)
    d = std::max(d, (a.spectrum - b.spectrum).cwiseAbs().maxCoeff());
  return d;
}

namespace {

StratumLabel make_label(const VectorXd& p_coords, const LinearAction& action,
                        const LabelOptions& lopts) {
  StratumLabel label;
  label.norm = p_coords.norm();
  const int n = action.dim_v();
  MatrixXd op = action.p_element_op(p_coords);
  if (lopts.sort_spectrum) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(op);
    label.spectrum = es.eigenvalues();
    label.canonicalized = true;
  } else {
    // keep the eigenbasis order of the torus frame; meaningful for abelian
    // actions where the moment values are simultaneously diagonal
    const auto& frame = action.torus();
    MatrixXd d = frame.v_basis.transpose() * op * frame.v_basis;
    label.spectrum.resize(n);
    for (int i = 0; i < n; ++i) label.spectrum[i] = d(i, i);
    d.diagonal().setZero();
    label.canonicalized = d.cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, label.norm);
  }
  label.representative = label.spectrum.asDiagonal();
  return label;
}

std::vector<VectorXd> distinct_weight_values(const LinearAction& action) {
  const auto& frame = action.torus();
  const double dtol = action.tolerances().weight_dedup_tol;
  std::vector<VectorXd> values;
  for (int i = 0; i < frame.n(); ++i) {
    bool found = false;
    for (const auto& v : values) {
      if ((frame.weights.row(i).transpose() - v).lpNorm<Eigen::Infinity>() <= dtol) {
        found = true;
        break;
      }
    }
    if (!found) values.push_back(frame.weights.row(i).transpose());
  }
  return values;
}

}  // namespace

CandidateLabels candidate_labels(const LinearAction& action, const CandidateOptions& opts) {
  CandidateLabels out;
  out.distinct_weights = distinct_weight_values(action);
  const int nd = static_cast<int>(out.distinct_weights.size());

  std::vector<std::vector<int>> supports;
  if (opts.supports) {
    supports = *opts.supports;
    for (const auto& s : supports)
      for (int i : s)
        if (i < 0 || i >= nd)
          throw ValidationError("candidate_labels: support index out of range");
  } else {
    if (nd > opts.max_distinct_weights)
      throw CapExceeded("candidate_labels: " + std::to_string(nd) +
                        " distinct weights exceed the enumeration cap of " +
                        std::to_string(opts.max_distinct_weights) +
                        "; pass explicit supports");
    for (unsigned long long mask = 1; mask < (1ULL << nd); ++mask) {
      std::vector<int> s;
      for (int i = 0; i < nd; ++i)
        if (mask & (1ULL << i)) s.push_back(i);
      supports.push_back(std::move(s));
    }
  }

  double scale2 = 1.0;
  for (const auto& w : out.distinct_weights) scale2 = std::max(scale2, w.squaredNorm());
  const double align_tol = 1e-9 * scale2;

  auto push_unique = [&](std::vector<CandidateLabel>& list, CandidateLabel&& cand) {
    for (const auto& c : list)
      if (labels_equal(c.label, cand.label, opts.label.spectrum_tol)) return;
    list.push_back(std::move(cand));
  };

  for (const auto& s : supports) {
    std::vector<VectorXd> pts;
    for (int i : s) pts.push_back(out.distinct_weights[i]);
    auto mn = min_norm_point(pts);

    CandidateLabel cand;
    cand.beta_t_coords = mn.point;
    cand.weight_subset = s;
    // torus coordinates -> p coordinates
    const auto& frame = action.torus();
    VectorXd p_coords = VectorXd::Zero(action.dim_p());
    for (int j = 0; j < frame.dim_t(); ++j)
      p_coords += mn.point[j] * frame.torus_coords[j];
    cand.beta_p_coords = p_coords;
    cand.label = make_label(p_coords, action, opts.label);

    // critical-equation alignment: every weight of the support must sit on
    // the sphere <beta, alpha> = |beta|^2
    bool aligned = true;
    const double b2 = mn.point.squaredNorm();
    for (const auto& alpha : pts) {
      if (std::abs(mn.point.dot(alpha) - b2) > align_tol) {
        aligned = false;
        break;
      }
    }
    if (aligned)
      push_unique(out.confirmed, std::move(cand));
    else
      push_unique(out.unconfirmed, std::move(cand));
  }
  return out;
}

LabeledFlow stratum_label(const Eigen::VectorXd& v, const LinearAction& action,
                          const FlowOptions& fopts, const LabelOptions& lopts) {
  LabeledFlow out;
  out.flow = flow(v, action, fopts);
  out.limit_moment = moment(out.flow.limit, action);
  out.label = make_label(out.limit_moment.p_coords, action, lopts);
  return out;
}

DescentResult minimal_vector_descent(const Eigen::VectorXd& v, const LinearAction& action,
                                     const DescentOptions& opts,
                                     const Eigen::MatrixXd* restricted_p) {
  if (v.norm() == 0.0) throw DomainError("minimal_vector_descent: v = 0");
  DescentResult res;
  VectorXd y = action.to_internal(v);
  const double v0norm = y.norm();
  const int dp = action.dim_p();

  auto moment_coords = [&](const VectorXd& x) {
    VectorXd c(dp);
    const double n2 = x.squaredNorm();
    for (int j = 0; j < dp; ++j) c[j] = x.dot(action.p_op(j) * x) / n2;
    if (restricted_p) c = (*restricted_p) * (restricted_p->transpose() * c);
    return c;
  };

  double best_mnorm = std::numeric_limits<double>::infinity();
  long since_best = 0;
  long it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (y.norm() <= opts.norm_floor * v0norm) {
      res.status = DescentStatus::null;
      break;
    }
    VectorXd mc = moment_coords(y);
    const double mnorm = mc.norm();
    res.moment_norm = mnorm;
    if (mnorm < opts.moment_tol) {
      res.status = y.norm() < opts.collapse_ratio * v0norm ? DescentStatus::null
                                                           : DescentStatus::semistable;
      break;
    }
    if (mnorm < best_mnorm * (1.0 - 1e-12)) {
      best_mnorm = mnorm;
      since_best = 0;
    } else if (++since_best > 200) {
      res.status = DescentStatus::stalled;
      break;
    }

    // exact line search along exp(-s m) via the eigendecomposition of m
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(action.p_element_op(mc));
    const VectorXd d = es.eigenvalues();
    VectorXd w = es.eigenvectors().transpose() * y;
    auto phi_prime = [&](double s) {
      double acc = 0.0;
      for (int a = 0; a < w.size(); ++a) {
        const double e = std::exp(std::clamp(-2.0 * s * d[a], -700.0, 700.0));
        acc += -2.0 * d[a] * w[a] * w[a] * e;
      }
      return acc;
    };
    auto norm_at = [&](double s) {
      double acc = 0.0;
      for (int a = 0; a < w.size(); ++a) {
        const double e = std::exp(std::clamp(-2.0 * s * d[a], -700.0, 700.0));
        acc += w[a] * w[a] * e;
      }
      return std::sqrt(acc);
    };

    double s_hi = 1.0 / std::max(mnorm, 1e-12);
    double s_lo = 0.0;
    bool collapsed = false;
    for (int expand = 0; expand < 200; ++expand) {
      if (phi_prime(s_hi) >= 0.0) break;
      if (norm_at(s_hi) <= opts.norm_floor * v0norm) {
        collapsed = true;
        break;
      }
      s_lo = s_hi;
      s_hi *= 2.0;
    }
    double s = s_hi;
    if (!collapsed) {
      for (int bi = 0; bi < 80; ++bi) {
        const double mid = 0.5 * (s_lo + s_hi);
        if (phi_prime(mid) < 0.0)
          s_lo = mid;
        else
          s_hi = mid;
      }
      s = 0.5 * (s_lo + s_hi);
    }
    VectorXd scaled(w.size());
    for (int a = 0; a < w.size(); ++a)
      scaled[a] = w[a] * std::exp(std::clamp(-s * d[a], -350.0, 350.0));
    y = es.eigenvectors() * scaled;
    if (collapsed) {
      res.status = DescentStatus::null;
      break;
    }
  }
  res.iterations = it;
  res.vector = action.from_internal(y);
  res.norm_ratio = y.norm() / v0norm;
  if (res.status != DescentStatus::semistable && res.status != DescentStatus::null &&
      it >= opts.max_iterations)
    res.status = DescentStatus::stalled;
  return res;
}

SemistableResult is_semistable_for_hbeta(const Eigen::VectorXd& v0,
                                         const BetaAdapted& adapted,
                                         const LinearAction& action,
                                         const DescentOptions& opts) {
  SemistableResult out;
  const VectorXd vi = action.to_internal(v0);
  if (vi.norm() == 0.0) {
    out.semistable = false;
    return out;
  }
  const double off = (vi - detail::project_onto(adapted.v_zero, vi)).norm();
  if (off > 1e-8 * vi.norm())
    throw DomainError("is_semistable_for_hbeta: v0 does not lie in V^0");

  out.descent = minimal_vector_descent(v0, action, opts, &adapted.h_beta_p);
  out.semistable = out.descent.status == DescentStatus::semistable;
  if (out.semistable) {
    MomentValue m = moment(out.descent.vector, action);
    out.full_moment_discrepancy = (m.p_coords - adapted.beta_p_coords).norm();
  }
  return out;
}

MembershipReport membership_in_stratum(const Eigen::VectorXd& v, const StratumLabel& label,
                                       const LinearAction& action,
                                       const FlowOptions& fopts,
                                       const LabelOptions& lopts) {
  MembershipReport rep;
  LabeledFlow lf = stratum_label(v, action, fopts, lopts);
  rep.flow_label = lf.label;
  rep.by_flow = labels_equal(lf.label, label, lopts.spectrum_tol);

  if (rep.by_flow) {
    // algebraic cross-check (the stratum as p_beta^{-1} of the semistable
    // set) when v lies in the nonnegative slice of the limit beta
    BetaAdapted adapted = beta_adapted(lf.limit_moment.p_coords, action);
    const VectorXd vi = action.to_internal(v);
    const double off = (vi - detail::project_onto(adapted.v_nonneg, vi)).norm();
    if (off <= 1e-8 * vi.norm()) {
      VectorXd proj = project_p_beta(v, adapted, action);
      if (proj.norm() > 1e-12 * v.norm()) {
        auto ss = is_semistable_for_hbeta(proj, adapted, action);
        rep.by_algebraic = ss.semistable;
        rep.consistent = ss.semistable;
      }
    }
  }
  return rep;
}

EstimateReport estimate_check(const Eigen::VectorXd& v, const BetaAdapted& adapted,
                              const LinearAction& action, double tol) {
  const VectorXd vi = action.to_internal(v);
  if (vi.norm() == 0.0) throw DomainError("estimate_check: v = 0");
  const double off = (vi - detail::project_onto(adapted.v_nonneg, vi)).norm();
  if (off > 1e-8 * vi.norm())
    throw DomainError("estimate_check: v does not lie in the nonnegative slice");

  EstimateReport rep;
  MomentValue m = moment(v, action);
  rep.moment_sq = m.energy;
  rep.pairing = m.p_coords.dot(adapted.beta_p_coords);
  rep.beta_sq = adapted.beta_norm * adapted.beta_norm;
  rep.ok = rep.moment_sq >= rep.pairing - tol && rep.pairing >= rep.beta_sq - tol;
  if (!rep.ok) {
    std::ostringstream os;
    os << "estimate_check: moment estimate violated (" << rep.moment_sq
       << " >= " << rep.pairing << " >= " << rep.beta_sq << " fails beyond " << tol
       << ")";
    throw std::logic_error(os.str());
  }
  rep.equality = std::abs(rep.moment_sq - rep.beta_sq) <= tol;
  if (rep.equality) {
    const double zero_off = (vi - detail::project_onto(adapted.v_zero, vi)).norm();
    const double beta_off = (m.p_coords - adapted.beta_p_coords).norm();
    rep.equality_consistent =
        zero_off <= std::sqrt(tol) * vi.norm() && beta_off <= std::sqrt(tol);
  }
  return rep;
}

QbetaReport q_beta_membership(const std::vector<Eigen::VectorXd>& exp_factors,
                              const Eigen::VectorXd& beta_p_coords,
                              const LinearAction& action) {
  const int n = action.dim_v();
  MatrixXd g = MatrixXd::Identity(n, n);
  for (const auto& c : exp_factors) g = g * detail::expm(action.algebra_op(c));

  MatrixXd bop = action.p_element_op(beta_p_coords);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(bop);
  const VectorXd d = es.eigenvalues();
  const MatrixXd u = es.eigenvectors();
  MatrixXd m = u.transpose() * g * u;
  const double mscale = std::max(m.norm(), 1e-300);
  // entries at rounding level are structural zeros, not exponential mass
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (std::abs(m(a, b)) <= 1e-13 * mscale) m(a, b) = 0.0;

  QbetaReport rep;
  const double base = m.norm();
  double prev_norm = base;
  MatrixXd prev = m;
  double t_prev = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = std::ldexp(1.0, k);  // 1, 2, 4, ..., 1024
    MatrixXd c(n, n);
    bool overflow = false;
    for (int a = 0; a < n && !overflow; ++a) {
      for (int b = 0; b < n; ++b) {
        if (m(a, b) == 0.0) {
          c(a, b) = 0.0;
          continue;
        }
        const double x = t * (d[b] - d[a]);
        if (x > 700.0) {
          overflow = true;
          rep.growth_exponent = d[b] - d[a];
          break;
        }
        c(a, b) = std::exp(x) * m(a, b);
      }
    }
    if (overflow || c.norm() > 1e3 * base) {
      rep.cls = QbetaClass::outside;
      if (!overflow && t > t_prev)
        rep.growth_exponent = std::log(c.norm() / prev_norm) / (t - t_prev);
      return rep;
    }
    if (k == 10) {
      const double drift = (c - prev).norm();
      if (drift < 1e-9 * (1.0 + c.norm())) {
        rep.limit = action.op_from_internal(u * c * u.transpose());
        rep.limit_is_identity =
            (c - MatrixXd::Identity(n, n)).norm() < 1e-8 * std::sqrt(double(n));
        rep.cls = (c - m).norm() < 1e-9 * (1.0 + mscale) ? QbetaClass::centralizer
                                                         : QbetaClass::parabolic;
      } else {
        rep.cls = QbetaClass::undetermined;
        rep.growth_exponent = std::log(c.norm() / prev_norm) / (t - t_prev);
      }
    }
    prev = c;
    prev_norm = c.norm();
    t_prev = t;
  }
  return rep;
}

}  // namespace nullcone
