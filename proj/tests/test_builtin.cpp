#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "nullcone/builtin.hpp"
#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"
#include "nullcone/moment.hpp"
#include "nullcone/strata.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace nullcone;

namespace {

VectorXd vec_of(const MatrixXd& a) {
  VectorXd v(a.size());
  int k = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) v[k++] = a(i, j);
  return v;
}

MatrixXd mat_of(const VectorXd& v, int n) {
  MatrixXd a(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = v[k++];
  return a;
}

// characteristic polynomial coefficients for n <= 3 (trace, second
// elementary symmetric, det); conjugation invariants
VectorXd char_poly(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  VectorXd c(3);
  c.setZero();
  c[0] = a.trace();
  if (n >= 2) {
    double e2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) e2 += a(i, i) * a(j, j) - a(i, j) * a(j, i);
    c[1] = e2;
  }
  c[2] = n >= 2 ? a.determinant() : 0.0;
  return c;
}

MatrixXd random_nilpotent(int n, nullcone::detail::Rng& rng) {
  MatrixXd u = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) u(i, j) = rng.normal();
  // conjugate by a random rotation to hide the triangular structure
  MatrixXd x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(x);
  MatrixXd q = qr.householderQ();
  return q * u * q.transpose();
}

MatrixXd random_semisimple(int n, nullcone::detail::Rng& rng) {
  // distinct real eigenvalues conjugated by a mildly non-orthogonal matrix
  VectorXd ev(n);
  for (int i = 0; i < n; ++i) ev[i] = rng.uniform(0.5, 2.0) + 1.5 * i;
  MatrixXd s = MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s(i, j) += 0.4 * rng.normal();
  return s * ev.asDiagonal() * s.inverse();
}

}  // namespace

TEST_CASE("every builtin action passes validation") {
  for (const char* name : {"scaling-r2", "sl-conj:2", "sl-conj:3", "brackets:2:gl",
                           "brackets:2:sl", "brackets:3:gl", "brackets:3:sl"}) {
    LinearAction act = make_named_action(name);
    CHECK(act.validation().transpose_residual < 1e-9);
    CHECK(act.validation().bracket_residual < 1e-9);
    CHECK(act.validation().compatibility_residual < 1e-9);
    CHECK(act.name() == name);
  }
  CHECK_THROWS_AS(make_named_action("nope"), ValidationError);
  CHECK_THROWS_AS(make_named_action("sl-conj:9"), ValidationError);
}

TEST_CASE("scaling action analytic facts") {
  LinearAction act = make_scaling_r2();
  // minimal set: |x| = |y| has vanishing moment pairing
  VectorXd v(2);
  v << -3, 3;
  CHECK(moment(v, act).norm() < 1e-14);
  // the null cone is the pair of axes
  VectorXd axis(2);
  axis << 0, 2;
  CHECK(minimal_vector_descent(axis, act).status == DescentStatus::null);
  VectorXd off(2);
  off << 1, 2;
  CHECK(minimal_vector_descent(off, act).status == DescentStatus::semistable);
}

TEST_CASE("conjugation moment formula on random matrices, n in {2,3}") {
  detail::Rng rng(42);
  for (int n : {2, 3}) {
    LinearAction act = make_sln_conjugation(n);
    for (int i = 0; i < 30; ++i) {
      MatrixXd a = mat_of(rng.normal_vector(n * n), n);
      MomentValue m = moment(vec_of(a), act);
      MatrixXd oracle = (a * a.transpose() - a.transpose() * a) / a.squaredNorm();
      // compare as operators through a probe vector
      VectorXd probe = rng.normal_vector(n * n);
      MatrixXd pm = mat_of(probe, n);
      VectorXd lhs = m.as_operator * probe;
      VectorXd rhs = vec_of(oracle * pm - pm * oracle);
      CHECK((lhs - rhs).norm() < 1e-10 * std::max(1.0, rhs.norm()));
    }
  }
}

TEST_CASE("normal matrices are minimal vectors of the conjugation action") {
  LinearAction act = make_sln_conjugation(3);
  detail::Rng rng(8);
  MatrixXd sym = MatrixXd::Zero(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) sym(i, j) = sym(j, i) = rng.normal();
  CHECK(moment(vec_of(sym), act).norm() < 1e-12);
  MatrixXd rot(3, 3);
  rot << 0, 1, 0, -1, 0, 0, 0, 0, 1;  // normal, not symmetric
  CHECK(moment(vec_of(rot), act).norm() < 1e-12);
}

TEST_CASE("label census for 2x2 conjugation") {
  LinearAction act = make_sln_conjugation(2);
  CandidateLabels cl = candidate_labels(act);
  REQUIRE(cl.confirmed.size() == 2);
  detail::Rng rng(21);
  int hit0 = 0, hit1 = 0;
  for (int i = 0; i < 20; ++i) {
    LabeledFlow lf = stratum_label(rng.unit_vector(4), act);
    REQUIRE(lf.flow.converged);
    if (lf.label.norm < 1e-6)
      ++hit0;
    else if (std::abs(lf.label.norm - std::sqrt(2.0)) < 1e-6)
      ++hit1;
  }
  CHECK(hit0 + hit1 == 20);
  CHECK(hit0 > 0);  // generic matrices are semistable
}

TEST_CASE("null cone of the conjugation action is the nilpotent cone") {
  detail::Rng rng(314);
  for (int n : {2, 3}) {
    LinearAction act = make_sln_conjugation(n);
    for (int i = 0; i < 30; ++i) {
      MatrixXd nil = random_nilpotent(n, rng);
      if (nil.norm() < 1e-6) continue;
      DescentResult res = minimal_vector_descent(vec_of(nil), act);
      CHECK(res.status == DescentStatus::null);

      MatrixXd semi = random_semisimple(n, rng);
      DescentResult res2 = minimal_vector_descent(vec_of(semi), act);
      REQUIRE(res2.status == DescentStatus::semistable);
      CHECK(res2.moment_norm < 1e-10);
      MatrixXd w = mat_of(res2.vector, n);
      CHECK((w * w.transpose() - w.transpose() * w).norm() <
            1e-8 * std::max(1.0, w.squaredNorm()));
      CHECK((char_poly(w) - char_poly(semi)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("gl bracket action: the identity acts as minus the identity") {
  LinearAction act = make_bracket_action(3, BracketGroup::gl);
  double res = 0.0;
  VectorXd coords =
      act.algebra_coords(-MatrixXd::Identity(act.dim_v(), act.dim_v()), &res);
  CHECK(res < 1e-10);

  // hence every nonzero bracket lies in the null cone
  detail::Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    VectorXd mu = rng.normal_vector(act.dim_v());
    CHECK(minimal_vector_descent(mu, act).status == DescentStatus::null);
  }
}

TEST_CASE("so(3) structure constants give a closed sl orbit") {
  LinearAction act = make_bracket_action(3, BracketGroup::sl);
  BracketTensor so3 = BracketTensor::zero(3);
  so3.set_coeff(0, 1, 2, 1.0);
  so3.set_coeff(1, 2, 0, 1.0);
  so3.set_coeff(0, 2, 1, -1.0);  // mu(e3, e1) = e2
  CHECK(jacobi_defect(so3) < 1e-14);
  CHECK_FALSE(bracket_is_nilpotent(so3));
  DescentResult res = minimal_vector_descent(so3.coeffs, act);
  CHECK(res.status == DescentStatus::semistable);
}

TEST_CASE("zero bracket is a fixed point outside the moment domain") {
  LinearAction act = make_bracket_action(3, BracketGroup::sl);
  BracketTensor zero = BracketTensor::zero(3);
  CHECK(jacobi_defect(zero) == 0.0);
  CHECK(bracket_is_nilpotent(zero));
  for (int a = 0; a < act.dim_g(); ++a)
    CHECK((act.g_basis()[a] * zero.coeffs).norm() == 0.0);
  CHECK_THROWS_AS(moment(zero.coeffs, act), DomainError);
}

TEST_CASE("jacobi defect distinguishes Lie brackets") {
  BracketTensor heis = BracketTensor::zero(3);
  heis.set_coeff(0, 1, 2, 1.0);
  CHECK(jacobi_defect(heis) == 0.0);
  CHECK(bracket_is_nilpotent(heis));

  detail::Rng rng(77);
  BracketTensor random = BracketTensor::from_vector(3, rng.normal_vector(9));
  CHECK(jacobi_defect(random) > 1e-12);  // almost surely non-Jacobi
}

TEST_CASE("heisenberg bracket is a critical point of the energy") {
  BracketTensor heis = BracketTensor::zero(3);
  heis.set_coeff(0, 1, 2, 1.0);
  NilsolitonReport rep = nilsoliton_residual(heis);
  CHECK(rep.initial_gradient < 1e-8);
  CHECK(rep.soliton_candidate);
  CHECK(rep.flow.converged);
  CHECK(rep.limit_gradient < 1e-8);
  CHECK(rep.limit_jacobi_defect < 1e-8);
  // the limit stays a two-step nilpotent bracket of the same shape
  BracketTensor limit = BracketTensor::from_vector(3, rep.flow.limit);
  CHECK(bracket_is_nilpotent(limit));
  CHECK(rep.label.norm == doctest::Approx(std::sqrt(8.0 / 3.0)));
}

TEST_CASE("abelian-plus-one-bracket in dimension 4") {
  BracketTensor mu = BracketTensor::zero(4);
  mu.set_coeff(0, 1, 2, 1.0);
  NilsolitonReport rep = nilsoliton_residual(mu);
  CHECK(rep.flow.converged);
  CHECK(rep.limit_gradient < 1e-8);
  CHECK(rep.limit_jacobi_defect < 1e-8);
  CHECK(rep.label.norm > 0.0);
}

TEST_CASE("nilsoliton analysis rejects bad input") {
  detail::Rng rng(3);
  BracketTensor random = BracketTensor::from_vector(3, rng.normal_vector(9));
  CHECK_THROWS_AS(nilsoliton_residual(random), DomainError);

  BracketTensor so3 = BracketTensor::zero(3);
  so3.set_coeff(0, 1, 2, 1.0);
  so3.set_coeff(1, 2, 0, 1.0);
  so3.set_coeff(0, 2, 1, -1.0);
  CHECK_THROWS_AS(nilsoliton_residual(so3), DomainError);  // not nilpotent

  CHECK_THROWS_AS(nilsoliton_residual(BracketTensor::zero(3)), DomainError);
}

TEST_CASE("flow limits stay on the Jacobi variety") {
  LinearAction act = make_bracket_action(3, BracketGroup::sl);
  // start from a scaled Heisenberg bracket perturbed inside the variety by a
  // group move (the variety is invariant)
  BracketTensor heis = BracketTensor::zero(3);
  heis.set_coeff(0, 1, 2, 1.0);
  detail::Rng rng(42);
  for (int i = 0; i < 3; ++i) {
    VectorXd a = 0.5 * rng.normal_vector(act.dim_g());
    VectorXd moved = detail::expm(act.algebra_op(a)) * heis.coeffs;
    REQUIRE(jacobi_defect(BracketTensor::from_vector(3, moved)) < 1e-10);
    FlowResult res = flow(moved, act);
    CHECK(res.converged);
    CHECK(jacobi_defect(BracketTensor::from_vector(3, res.limit)) < 1e-8);
  }
}

TEST_CASE("bracket tensor accessors respect antisymmetry") {
  BracketTensor t = BracketTensor::zero(3);
  t.set_coeff(0, 2, 1, 0.7);
  CHECK(t.coeff(0, 2, 1) == doctest::Approx(0.7));
  CHECK(t.coeff(2, 0, 1) == doctest::Approx(-0.7));
  CHECK(t.coeff(1, 1, 0) == 0.0);
  VectorXd x(3), y(3);
  x << 1, 0, 0;
  y << 0, 0, 1;
  VectorXd out = t.apply(x, y);
  CHECK(out[1] == doctest::Approx(0.7));
}
