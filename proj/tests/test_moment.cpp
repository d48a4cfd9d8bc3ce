#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nullcone/builtin.hpp"
#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"
#include "nullcone/moment.hpp"

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

// independent oracle for the conjugation representation
MatrixXd conj_op(const MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  MatrixXd op(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      MatrixXd e = MatrixXd::Zero(n, n);
      e(a, b) = 1.0;
      op.col(a * n + b) = vec_of(x * e - e * x);
    }
  return op;
}

double energy_of(const VectorXd& v, const LinearAction& action) {
  return moment(v, action).energy;
}

}  // namespace

TEST_CASE("moment pairing matches the rational formula on R^2") {
  LinearAction act = make_scaling_r2();
  MatrixXd gen(2, 2);
  gen << 1, 0, 0, -1;
  double genres = 0.0;
  VectorXd gen_coords = act.algebra_coords(gen, &genres);
  REQUIRE(genres < 1e-12);
  detail::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    VectorXd v = rng.normal_vector(2);
    if (v.norm() < 1e-6) continue;
    MomentValue m = moment(v, act);
    const double pairing = m.p_coords.dot(gen_coords.tail(1));
    const double formula = (v[0] * v[0] - v[1] * v[1]) / v.squaredNorm();
    CHECK(std::abs(pairing - formula) < 1e-12);
  }
}

TEST_CASE("moment of E12 under sl2 conjugation is diag(1,-1)") {
  LinearAction act = make_sln_conjugation(2);
  MatrixXd e12 = MatrixXd::Zero(2, 2);
  e12(0, 1) = 1.0;
  MomentValue m = moment(vec_of(e12), act);
  MatrixXd h(2, 2);
  h << 1, 0, 0, -1;
  CHECK((m.as_operator - conj_op(h)).norm() < 1e-12);
  CHECK(m.energy == doctest::Approx(2.0));
}

TEST_CASE("moment matches the commutator formula on random matrices") {
  LinearAction act = make_sln_conjugation(2);
  detail::Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    MatrixXd a = mat_of(rng.normal_vector(4), 2);
    if (a.norm() < 1e-6) continue;
    MomentValue m = moment(vec_of(a), act);
    MatrixXd oracle = (a * a.transpose() - a.transpose() * a) / a.squaredNorm();
    CHECK((m.as_operator - conj_op(oracle)).norm() < 1e-10);
  }
}

TEST_CASE("minimal vectors are zeros of the moment map") {
  LinearAction act = make_scaling_r2();
  VectorXd v(2);
  v << 1, 1;
  CHECK(moment(v, act).norm() < 1e-14);
  CHECK_THROWS_AS(moment(VectorXd::Zero(2), act), DomainError);
}

TEST_CASE("beta_plus spectra") {
  SUBCASE("zero beta gives the zero operator") {
    LinearAction act = make_scaling_r2();
    CHECK(beta_plus(VectorXd::Zero(1), act).norm() == 0.0);
  }
  SUBCASE("sl2: eigenvalues of (diag(1,-1))+ are {-4,-2,-2,0}") {
    LinearAction act = make_sln_conjugation(2);
    MatrixXd h(2, 2);
    h << 1, 0, 0, -1;
    VectorXd coords = act.algebra_coords(conj_op(h)).tail(act.dim_p());
    MatrixXd bp = beta_plus(coords, act);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(bp);
    VectorXd ev = es.eigenvalues();
    CHECK(ev[0] == doctest::Approx(-4.0));
    CHECK(ev[1] == doctest::Approx(-2.0));
    CHECK(ev[2] == doctest::Approx(-2.0));
    CHECK(ev[3] == doctest::Approx(0.0));
  }
  SUBCASE("scaling action: eigenvalues {-1,-3}") {
    LinearAction act = make_scaling_r2();
    MatrixXd gen(2, 2);
    gen << 1, 0, 0, -1;
    VectorXd coords = act.algebra_coords(gen).tail(1);
    MatrixXd bp = beta_plus(coords, act);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(bp);
    CHECK(es.eigenvalues()[0] == doctest::Approx(-3.0));
    CHECK(es.eigenvalues()[1] == doctest::Approx(-1.0));
  }
}

TEST_CASE("gradient vanishes at critical points") {
  LinearAction act2 = make_scaling_r2();
  VectorXd v(2);
  v << 1, 1;
  CHECK(grad_energy(v, act2).norm() < 1e-13);

  LinearAction act = make_sln_conjugation(2);
  MatrixXd e12 = MatrixXd::Zero(2, 2);
  e12(0, 1) = 1.0;
  CHECK(grad_energy(vec_of(e12), act).norm() < 1e-13);
}

TEST_CASE("gradient agrees with central finite differences") {
  // oracle: (F(v + h u) - F(v - h u)) / 2h with h = 1e-5
  std::vector<LinearAction> actions;
  actions.push_back(make_scaling_r2());
  actions.push_back(make_sln_conjugation(2));
  actions.push_back(make_bracket_action(3, BracketGroup::sl));
  detail::Rng rng(1234);
  const double h = 1e-5;
  for (const auto& act : actions) {
    for (int i = 0; i < 25; ++i) {
      VectorXd v = rng.unit_vector(act.dim_v());
      VectorXd g = grad_energy(v, act);
      VectorXd u = rng.unit_vector(act.dim_v());
      const double fd =
          (energy_of(v + h * u, act) - energy_of(v - h * u, act)) / (2.0 * h);
      const double an = g.dot(u);
      CHECK(std::abs(fd - an) < 1e-6 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("gradient is orthogonal to the base point") {
  LinearAction act = make_sln_conjugation(3);
  detail::Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    VectorXd v = rng.unit_vector(9);
    CHECK(std::abs(grad_energy(v, act).dot(v)) < 1e-12);
  }
}

TEST_CASE("moment differential: pairing identity and finite differences") {
  LinearAction act = make_sln_conjugation(2);
  detail::Rng rng(31);
  SUBCASE("zero direction gives zero") {
    VectorXd v = rng.unit_vector(4);
    CHECK(moment_differential(v, VectorXd::Zero(4), act).norm() == 0.0);
  }
  SUBCASE("finite-difference oracle") {
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i) {
      VectorXd v = rng.unit_vector(4);
      VectorXd w = rng.unit_vector(4);
      w -= v.dot(w) * v;  // tangent
      VectorXd dm = moment_differential(v, w, act);
      VectorXd fd = (moment(v + h * w, act).p_coords - moment(v - h * w, act).p_coords) /
                    (2.0 * h);
      CHECK((dm - fd).norm() < 1e-6 * (1.0 + dm.norm()));
    }
  }
  SUBCASE("K-directions differentiate the equivariance relation") {
    // d/dt m(exp(tX) v) = [X, m(v)] for X in k
    for (int i = 0; i < 10; ++i) {
      VectorXd v = rng.unit_vector(4);
      const MatrixXd& xop = act.g_basis()[0];  // k-basis element
      VectorXd w = xop * v;
      VectorXd dm = moment_differential(v, w, act);
      MatrixXd mop = act.p_element_op(moment(v, act).p_coords);
      VectorXd oracle = act.algebra_coords(xop * mop - mop * xop).tail(act.dim_p());
      CHECK((dm - oracle).norm() < 1e-9);
    }
  }
}

TEST_CASE("flow from (1,2) reaches the diagonal minimal vector") {
  LinearAction act = make_scaling_r2();
  VectorXd v(2);
  v << 1, 2;
  FlowResult res = flow(v / v.norm(), act);
  CHECK(res.converged);
  VectorXd expected(2);
  expected << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK((res.limit - expected).norm() < 1e-8);
  CHECK(res.energy_trace.back() < 1e-12);
  // energy trace is nonincreasing
  for (std::size_t k = 1; k < res.energy_trace.size(); ++k)
    CHECK(res.energy_trace[k] <= res.energy_trace[k - 1] + 1e-14);
}

TEST_CASE("flow is stationary at critical points") {
  LinearAction act = make_sln_conjugation(2);
  MatrixXd e12 = MatrixXd::Zero(2, 2);
  e12(0, 1) = 1.0;
  FlowResult res = flow(vec_of(e12), act);
  CHECK(res.converged);
  CHECK(res.steps == 0);
  CHECK(res.energy_trace.front() == doctest::Approx(2.0));
  CHECK((res.limit - vec_of(e12)).norm() < 1e-12);

  // a normal matrix direction is a zero-energy fixed point
  MatrixXd j(2, 2);
  j << 0, 1, -1, 0;
  FlowResult res2 = flow(vec_of(j) / vec_of(j).norm(), act);
  CHECK(res2.steps == 0);
  CHECK(res2.energy_trace.front() < 1e-20);
}

TEST_CASE("flow respects scale invariance of the energy") {
  LinearAction act = make_sln_conjugation(2);
  detail::Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    VectorXd v = rng.unit_vector(4);
    const double f = energy_of(v, act);
    for (double c : {0.5, 2.0, -1.0})
      CHECK(std::abs(energy_of(c * v, act) - f) < 1e-12);
  }
}

TEST_CASE("moment map is K-equivariant") {
  LinearAction act = make_sln_conjugation(2);
  detail::Rng rng(404);
  for (int i = 0; i < 20; ++i) {
    VectorXd v = rng.unit_vector(4);
    VectorXd xi = rng.normal_vector(act.dim_k());
    VectorXd g_coords = VectorXd::Zero(act.dim_g());
    g_coords.head(act.dim_k()) = xi;
    MatrixXd k = detail::expm(act.algebra_op(g_coords));
    MatrixXd lhs = moment(k * v, act).as_operator;
    MatrixXd rhs = k * moment(v, act).as_operator * k.inverse();
    CHECK((lhs - rhs).norm() < 1e-9);
  }
}

TEST_CASE("hessian at the E12 critical point") {
  LinearAction act = make_sln_conjugation(2);
  MatrixXd e12 = MatrixXd::Zero(2, 2), e21 = MatrixXd::Zero(2, 2);
  e12(0, 1) = 1.0;
  e21(1, 0) = 1.0;
  const VectorXd vc = vec_of(e12);

  SUBCASE("K-orbit directions are flat") {
    // w = J . v_c with J the rotation generator
    MatrixXd j(2, 2);
    j << 0, 1, -1, 0;
    VectorXd w = conj_op(j) * vc;
    CHECK(std::abs(hessian_energy_at_critical(vc, w, act)) < 1e-8);
  }
  SUBCASE("the E21 direction matches the closed-form energy -16") {
    // along cos t E12 + sin t E21 the energy is 1 + cos 4t, so F''(0) = -16
    const double val = hessian_energy_at_critical(vc, vec_of(e21), act);
    CHECK(val == doctest::Approx(-16.0));
  }
  SUBCASE("finite differences along great circles") {
    detail::Rng rng(2718);
    for (int i = 0; i < 10; ++i) {
      VectorXd w = rng.unit_vector(4);
      w -= vc.dot(w) * vc;
      if (w.norm() < 1e-3) continue;
      w /= w.norm();
      const double val = hessian_energy_at_critical(vc, w, act);
      const double h = 1e-3;
      auto on_circle = [&](double t) {
        return energy_of(std::cos(t) * vc + std::sin(t) * w, act);
      };
      const double fd = (on_circle(h) - 2.0 * on_circle(0.0) + on_circle(-h)) / (h * h);
      CHECK(std::abs(val - fd) < 1e-4 * std::max(1.0, std::abs(val)));
    }
  }
  SUBCASE("the identity direction lies in the negative complement") {
    const double val =
        hessian_energy_at_critical(vc, vec_of(MatrixXd::Identity(2, 2)), act);
    CHECK(val < 0.0);
  }
  SUBCASE("rejects non-critical points") {
    VectorXd bad(4);
    bad << 1, 0.3, 0.2, -1;
    CHECK_THROWS_AS(hessian_energy_at_critical(bad / bad.norm(), vec_of(e21), act),
                    DomainError);
  }
}

TEST_CASE("critical points are characterized by the shifted operator") {
  LinearAction act = make_sln_conjugation(2);
  detail::Rng rng(55);
  for (int i = 0; i < 20; ++i) {
    VectorXd v = rng.unit_vector(4);
    MomentValue m = moment(v, act);
    MatrixXd bp = beta_plus(m.p_coords, act);
    const double lhs = grad_energy(v, act).norm();
    const double rhs = 4.0 * (bp * v).norm();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("trajectory sampling and bounded step caps") {
  LinearAction act = make_scaling_r2();
  VectorXd v(2);
  v << 1, 2;
  FlowOptions opts;
  opts.trace_stride = 5;
  FlowResult res = flow(v, act, opts);
  CHECK(res.trajectory.size() >= 2);
  CHECK(res.trajectory.front().first == 0.0);
  CHECK((res.trajectory.back().second - res.limit).norm() < 1e-12);

  FlowOptions capped;
  capped.max_steps = 3;
  capped.grad_tol = 1e-300;  // force the cap
  FlowResult res2 = flow(v, act, capped);
  CHECK_FALSE(res2.converged);
  CHECK(res2.steps == 3);
}
