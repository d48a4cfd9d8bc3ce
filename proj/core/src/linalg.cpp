#include "nullcone/detail/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace nullcone::detail {

VectorXd flatten(const MatrixXd& a) {
  VectorXd v(a.size());
  int k = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) v[k++] = a(i, j);
  return v;
}

MatrixXd unflatten(const VectorXd& v, int rows, int cols) {
  MatrixXd a(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = v[k++];
  return a;
}

MatrixXd orthonormal_columns(const MatrixXd& a, double tol) {
  MatrixXd out(a.rows(), a.cols());
  int kept = 0;
  for (int j = 0; j < a.cols(); ++j) {
    VectorXd w = a.col(j);
    const double scale = w.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < kept; ++i) w -= out.col(i).dot(w) * out.col(i);
    if (w.norm() > tol * std::max(scale, 1.0)) out.col(kept++) = w / w.norm();
  }
  return out.leftCols(kept);
}

MatrixXd nullspace(const MatrixXd& a, double tol) {
  if (a.rows() == 0 || a.cols() == 0)
    return MatrixXd::Identity(a.cols(), a.cols());
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // callers work in orthonormal coordinates, so keep an absolute floor: a
  // numerically-zero matrix has a full nullspace, not full rank
  const double cutoff = tol * std::max(sv.size() > 0 ? sv[0] : 0.0, 1.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

double span_residual(const MatrixXd& basis, const VectorXd& x) {
  if (basis.cols() == 0) return x.norm();
  VectorXd c = basis.colPivHouseholderQr().solve(x);
  return (basis * c - x).norm();
}

VectorXd span_coordinates(const MatrixXd& basis, const VectorXd& x) {
  if (basis.cols() == 0) return VectorXd(0);
  return basis.colPivHouseholderQr().solve(x);
}

SimDiagResult simultaneous_diagonalize(const std::vector<MatrixXd>& ops,
                                       double cluster_tol) {
  const int n = ops.empty() ? 0 : static_cast<int>(ops[0].rows());
  SimDiagResult res;
  res.q = MatrixXd::Identity(n, n);
  res.eigenvals = MatrixXd::Zero(n, static_cast<int>(ops.size()));
  res.residual = 0.0;
  if (n == 0) return res;

  // blocks of columns of q not yet split apart
  std::vector<std::pair<int, int>> blocks{{0, n}};
  for (const auto& op : ops) {
    const double scale = std::max(op.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<std::pair<int, int>> next;
    for (auto [lo, hi] : blocks) {
      const int m = hi - lo;
      if (m == 1) {
        next.emplace_back(lo, hi);
        continue;
      }
      MatrixXd sub = res.q.middleCols(lo, m).transpose() * op * res.q.middleCols(lo, m);
      sub = 0.5 * (sub + sub.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub);
      res.q.middleCols(lo, m) = res.q.middleCols(lo, m) * es.eigenvectors();
      const VectorXd& ev = es.eigenvalues();
      int start = 0;
      for (int i = 1; i <= m; ++i) {
        if (i == m || ev[i] - ev[i - 1] > cluster_tol * scale) {
          next.emplace_back(lo + start, lo + i);
          start = i;
        }
      }
    }
    blocks = std::move(next);
  }

  for (std::size_t j = 0; j < ops.size(); ++j) {
    MatrixXd d = res.q.transpose() * ops[j] * res.q;
    for (int i = 0; i < n; ++i) res.eigenvals(i, static_cast<int>(j)) = d(i, i);
    d.diagonal().setZero();
    res.residual = std::max(res.residual, d.cwiseAbs().maxCoeff());
  }

  // fix eigenvector signs: largest-magnitude entry positive
  for (int i = 0; i < n; ++i) {
    int imax = 0;
    res.q.col(i).cwiseAbs().maxCoeff(&imax);
    if (res.q(imax, i) < 0) res.q.col(i) = -res.q.col(i);
  }
  return res;
}

MatrixXd expm_sym(const MatrixXd& q, const VectorXd& d, double s) {
  return q * (s * d.array()).exp().matrix().asDiagonal() * q.transpose();
}

MatrixXd expm(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return a;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() <
      1e-13 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
    return expm_sym(es.eigenvectors(), es.eigenvalues(), 1.0);
  }
  // scaling and squaring with a Taylor kernel; fine at desk scale
  const double nrm = a.cwiseAbs().maxCoeff() * n;
  int squarings = 0;
  double scale = 1.0;
  while (nrm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  MatrixXd x = a * scale;
  MatrixXd term = MatrixXd::Identity(n, n);
  MatrixXd sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

MatrixXd log_unitriangular(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  MatrixXd x = a - MatrixXd::Identity(n, n);
  MatrixXd term = x;
  MatrixXd sum = MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    sum += term / static_cast<double>(k) * ((k % 2) ? 1.0 : -1.0);
    term = term * x;
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
  }
  return sum;
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * M_PI * u2;
  spare_ = r * std::sin(th);
  have_spare_ = true;
  return r * std::cos(th);
}

VectorXd Rng::normal_vector(int n) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

VectorXd Rng::unit_vector(int n) {
  VectorXd v = normal_vector(n);
  double nn = v.norm();
  while (nn < 1e-12) {
    v = normal_vector(n);
    nn = v.norm();
  }
  return v / nn;
}

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace nullcone::detail
