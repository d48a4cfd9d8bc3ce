#include "nullcone/torus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"

namespace nullcone {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<VectorXd> support_weights(const TorusFrame& frame,
                                      const std::vector<int>& indices) {
  std::vector<VectorXd> pts;
  pts.reserve(indices.size());
  for (int i : indices) pts.push_back(frame.weights.row(i).transpose());
  return pts;
}

}  // namespace

SupportSet orbit_support(const Eigen::VectorXd& v, const LinearAction& action) {
  const auto& frame = action.torus();
  const VectorXd c = frame.frame_coords(action.to_internal(v));
  SupportSet s;
  s.signs.assign(c.size(), 0);
  const double thresh = action.tolerances().support_rel_tol * c.norm();
  for (int i = 0; i < c.size(); ++i) {
    if (std::abs(c[i]) > thresh) {
      s.indices.push_back(i);
      s.signs[i] = c[i] > 0 ? 1 : -1;
    }
  }
  return s;
}

bool is_orbit_closed(const Eigen::VectorXd& v, const LinearAction& action) {
  const SupportSet s = orbit_support(v, action);
  if (s.indices.empty()) return true;  // the origin is a fixed point
  auto cert = zero_in_relative_interior(support_weights(action.torus(), s.indices));
  return cert.zero_in_interior;
}

Destabilizer destabilizing_direction(const Eigen::VectorXd& v, const LinearAction& action) {
  const auto& frame = action.torus();
  const SupportSet s = orbit_support(v, action);
  if (s.indices.empty())
    throw DomainError("destabilizing_direction: no destabilizer, the orbit of 0 is closed");
  const auto pts = support_weights(frame, s.indices);
  auto cert = zero_in_relative_interior(pts);
  if (cert.zero_in_interior)
    throw DomainError("destabilizing_direction: no destabilizer, the orbit is closed");
  if (cert.degenerate)
    throw ConvergenceError("destabilizing_direction: degenerate separator", 0.0);

  Destabilizer out;
  VectorXd beta = cert.separator;
  out.direction_t = -beta / beta.norm();
  VectorXd t_in_p = VectorXd::Zero(action.dim_p());
  for (int j = 0; j < frame.dim_t(); ++j)
    t_in_p += out.direction_t[j] * frame.torus_coords[j];
  out.direction_op = action.op_from_internal(action.p_element_op(t_in_p));

  // exact limit: the coordinates whose pairing with the direction vanishes
  // survive; negative pairings decay. Positive pairings cannot occur.
  const VectorXd pairing = frame.pairings(out.direction_t);
  VectorXd coords = frame.frame_coords(action.to_internal(v));
  const double keep_tol = 1e-9 * std::max(1.0, frame.weights.size() > 0
                                                   ? frame.weights.cwiseAbs().maxCoeff()
                                                   : 0.0);
  VectorXd limit_coords = VectorXd::Zero(coords.size());
  for (int i : s.indices) {
    if (std::abs(pairing[i]) <= keep_tol) {
      limit_coords[i] = coords[i];
      out.kept_indices.push_back(i);
    }
  }
  out.limit = action.from_internal(frame.from_frame(limit_coords));
  return out;
}

TorusMinimal minimal_vector_torus(const Eigen::VectorXd& v, const LinearAction& action) {
  const auto& frame = action.torus();
  if (v.norm() == 0.0) throw DomainError("minimal_vector_torus: v = 0");
  const SupportSet s = orbit_support(v, action);
  if (!s.indices.empty() &&
      !zero_in_relative_interior(support_weights(frame, s.indices)).zero_in_interior)
    throw DomainError(
        "minimal_vector_torus: orbit is not closed; use closed_orbit_in_closure");

  const int dt = frame.dim_t();
  VectorXd coords = frame.frame_coords(action.to_internal(v));

  // minimize f(lambda) = sum v_i^2 exp(2 <lambda, a_i>) over span{a_i}
  MatrixXd wsup(static_cast<int>(s.indices.size()), dt);
  for (std::size_t k = 0; k < s.indices.size(); ++k)
    wsup.row(static_cast<int>(k)) = frame.weights.row(s.indices[k]);
  MatrixXd span = detail::orthonormal_columns(wsup.transpose());  // dt x r
  const int r = static_cast<int>(span.cols());

  TorusMinimal out;
  out.newton_iterations = 0;
  VectorXd mu = VectorXd::Zero(r);
  if (r > 0) {
    const MatrixXd wr = wsup * span;  // |I| x r, reduced weights
    VectorXd v2(s.indices.size());
    for (std::size_t k = 0; k < s.indices.size(); ++k)
      v2[static_cast<int>(k)] = coords[s.indices[k]] * coords[s.indices[k]];
    auto value = [&](const VectorXd& m) {
      return (v2.array() * (2.0 * (wr * m).array()).exp()).sum();
    };
    for (int it = 0; it < 200; ++it) {
      const VectorXd e = (2.0 * (wr * mu).array()).exp();
      VectorXd g = VectorXd::Zero(r);
      MatrixXd h = MatrixXd::Zero(r, r);
      for (int k = 0; k < wr.rows(); ++k) {
        const double wgt = v2[k] * e[k];
        g += 2.0 * wgt * wr.row(k).transpose();
        h += 4.0 * wgt * wr.row(k).transpose() * wr.row(k);
      }
      if (g.norm() < 1e-14 * std::max(1.0, value(mu))) break;
      VectorXd d = h.ldlt().solve(-g);
      double step = 1.0;
      const double f0 = value(mu);
      const double slope = g.dot(d);
      while (step > 1e-16 && value(mu + step * d) > f0 + 0.25 * step * slope) step *= 0.5;
      mu += step * d;
      ++out.newton_iterations;
    }
  }

  const VectorXd lambda = span * mu;
  const VectorXd pairing = frame.pairings(lambda);
  VectorXd min_coords = coords;
  for (int i = 0; i < coords.size(); ++i) min_coords[i] *= std::exp(pairing[i]);
  out.vector = action.from_internal(frame.from_frame(min_coords));
  out.log_parameter = lambda;

  double crit = 0.0;
  for (int j = 0; j < dt; ++j) {
    double pair = 0.0;
    for (int i = 0; i < min_coords.size(); ++i)
      pair += frame.weights(i, j) * min_coords[i] * min_coords[i];
    crit = std::max(crit, std::abs(pair));
  }
  out.criticality_residual = crit / std::max(min_coords.squaredNorm(), 1e-300);
  return out;
}

Eigen::VectorXd closed_orbit_in_closure(const Eigen::VectorXd& v, const LinearAction& action) {
  VectorXd cur = v;
  const int n = action.dim_v();
  for (int round = 0; round <= n + 1; ++round) {
    const SupportSet s = orbit_support(cur, action);
    if (s.indices.empty()) return VectorXd::Zero(v.size());
    if (is_orbit_closed(cur, action)) return minimal_vector_torus(cur, action).vector;
    cur = destabilizing_direction(cur, action).limit;
  }
  // support strictly shrinks each round, so this is unreachable
  throw ConvergenceError("closed_orbit_in_closure: support failed to shrink", 0.0);
}

SeparationFamily separation_family(const LinearAction& action, const FamilyOptions& opts) {
  const auto& frame = action.torus();
  const int n = frame.n();
  SeparationFamily fam;
  fam.n = n;

  // distinct weight classes (dedup within tolerance)
  const double dtol = action.tolerances().weight_dedup_tol;
  std::vector<int> class_of(n, -1);
  std::vector<VectorXd> values;
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < values.size(); ++c) {
      if ((frame.weights.row(i).transpose() - values[c]).lpNorm<Eigen::Infinity>() <= dtol) {
        class_of[i] = static_cast<int>(c);
        break;
      }
    }
    if (class_of[i] < 0) {
      class_of[i] = static_cast<int>(values.size());
      values.push_back(frame.weights.row(i).transpose());
    }
  }
  if (static_cast<int>(values.size()) > opts.max_distinct_weights)
    throw CapExceeded("separation_family: more than " +
                      std::to_string(opts.max_distinct_weights) +
                      " distinct weights; supply supports explicitly");
  if (n > 8 * static_cast<int>(sizeof(unsigned long long)))
    throw CapExceeded("separation_family: dimension too large for subset enumeration");

  // admissibility depends only on the set of distinct weight values
  std::map<unsigned long long, bool> admissible_by_value_mask;
  auto value_set_admissible = [&](unsigned long long vmask) {
    auto it = admissible_by_value_mask.find(vmask);
    if (it != admissible_by_value_mask.end()) return it->second;
    std::vector<VectorXd> pts;
    for (std::size_t c = 0; c < values.size(); ++c)
      if (vmask & (1ULL << c)) pts.push_back(values[c]);
    const bool adm = zero_in_relative_interior(pts).zero_in_interior;
    admissible_by_value_mask.emplace(vmask, adm);
    return adm;
  };

  const unsigned long long total = 1ULL << n;
  for (unsigned long long mask = 1; mask < total; ++mask) {
    unsigned long long vmask = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1ULL << i)) vmask |= 1ULL << class_of[i];
    if (!value_set_admissible(vmask)) continue;
    ++fam.admissible_supports;

    std::vector<int> support;
    for (int i = 0; i < n; ++i)
      if (mask & (1ULL << i)) support.push_back(i);
    const int sz = static_cast<int>(support.size());

    // null space of w -> sum_i w_i alpha_i on the support
    MatrixXd wsup(frame.dim_t(), sz);
    for (int k = 0; k < sz; ++k) wsup.col(k) = frame.weights.row(support[k]).transpose();
    MatrixXd null = detail::nullspace(wsup);
    const int r = static_cast<int>(null.cols());
    if (r == 0) continue;  // cannot happen for an admissible support

    // strictly positive certificate (exists by admissibility)
    auto cert = zero_in_relative_interior(
        [&] {
          std::vector<VectorXd> pts;
          for (int k = 0; k < sz; ++k) pts.push_back(wsup.col(k));
          return pts;
        }());
    VectorXd center = cert.zero_in_interior
                          ? cert.coefficients
                          : VectorXd(VectorXd::Ones(sz) / sz);
    center /= center.sum();

    // positive basis: blend null-space perturbations into the center
    std::vector<VectorXd> basis_w;
    const double cmin = center.minCoeff();
    for (int k = 0; k < r; ++k) {
      const double zmax = null.col(k).cwiseAbs().maxCoeff();
      const double eps = 0.45 * cmin / std::max(zmax, 1e-300);
      VectorXd w = center + eps * null.col(k);
      const double sum = w.sum();
      if (std::abs(sum) < 1e-12 || w.minCoeff() <= 0) {
        w = center - eps * null.col(k);  // flip the perturbation
      }
      w /= w.sum();
      basis_w.push_back(w);
    }
    // verify independence; fall back to scaled perturbations if needed
    {
      MatrixXd bmat(sz, r);
      for (int k = 0; k < r; ++k) bmat.col(k) = basis_w[k];
      Eigen::JacobiSVD<MatrixXd> svd(bmat);
      if (r > 1 && svd.singularValues()(r - 1) < 1e-10 * svd.singularValues()(0)) {
        basis_w.clear();
        for (int k = 0; k < r; ++k) {
          const double zmax = null.col(k).cwiseAbs().maxCoeff();
          const double eps = (0.2 + 0.2 * k / std::max(r - 1, 1)) * cmin / std::max(zmax, 1e-300);
          VectorXd w = center + eps * null.col(k);
          w /= w.sum();
          basis_w.push_back(w);
        }
      }
    }

    // all sign patterns on the support
    const unsigned long long patterns = 1ULL << sz;
    if (fam.functions.size() + basis_w.size() * patterns > opts.max_functions)
      throw CapExceeded("separation_family: family size exceeds the cap");
    for (unsigned long long pat = 0; pat < patterns; ++pat) {
      std::vector<int> sigma(n, 0);
      for (int k = 0; k < sz; ++k) sigma[support[k]] = (pat & (1ULL << k)) ? -1 : 1;
      for (const auto& w : basis_w) {
        SeparationFunction f;
        f.support = support;
        f.exponents = VectorXd::Zero(n);
        for (int k = 0; k < sz; ++k) f.exponents[support[k]] = w[k];
        f.signs = sigma;
        fam.functions.push_back(std::move(f));
      }
    }
  }
  return fam;
}

Eigen::VectorXd evaluate_phi(const Eigen::VectorXd& v, const SeparationFamily& family,
                             const LinearAction& action) {
  const auto& frame = action.torus();
  const VectorXd c = frame.frame_coords(action.to_internal(v));
  VectorXd phi(family.functions.size());
  for (std::size_t k = 0; k < family.functions.size(); ++k) {
    const auto& f = family.functions[k];
    double logsum = 0.0;
    bool inside = true;
    for (int i : f.support) {
      const double x = f.signs[i] * c[i];
      if (x <= 0.0) {
        inside = false;
        break;
      }
      logsum += f.exponents[i] * std::log(x);
    }
    phi[static_cast<int>(k)] = inside ? std::exp(logsum) : 0.0;
  }
  return phi;
}

bool is_in_null_cone_torus(const Eigen::VectorXd& v, const LinearAction& action,
                           const SeparationFamily* family, bool* phi_discrepancy) {
  const VectorXd w = closed_orbit_in_closure(v, action);
  const bool null = w.norm() <= 1e-10 * std::max(1.0, v.norm());
  if (family) {
    const double phinorm = evaluate_phi(v, *family, action).norm();
    const bool phi_null = phinorm <= 1e-10 * std::max(1.0, v.norm());
    if (phi_discrepancy) *phi_discrepancy = (phi_null != null);
  }
  return null;
}

}  // namespace nullcone
