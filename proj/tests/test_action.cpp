#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "nullcone/action.hpp"
#include "nullcone/detail/linalg.hpp"
#include "nullcone/errors.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace nullcone;

namespace {

MatrixXd unit_mat(int n, int i, int j) {
  MatrixXd m = MatrixXd::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

// ad-representation of X on Mat(2,R) ~ R^4 (row-major), built directly from
// commutators; this is the independent oracle for the conjugation action.
MatrixXd ad_op(const MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  MatrixXd op(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      MatrixXd e = unit_mat(n, a, b);
      MatrixXd c = x * e - e * x;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) op(i * n + j, a * n + b) = c(i, j);
    }
  return op;
}

ActionSpec sl2_conjugation_spec() {
  ActionSpec spec;
  spec.dim_v = 4;
  MatrixXd h(2, 2), e(2, 2), f(2, 2);
  h << 1, 0, 0, -1;
  e << 0, 1, 0, 0;
  f << 0, 0, 1, 0;
  spec.generators = {ad_op(h), ad_op(e), ad_op(f)};
  spec.name = "sl2-conj-oracle";
  return spec;
}

ActionSpec scaling_spec() {
  ActionSpec spec;
  spec.dim_v = 2;
  MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  spec.generators = {a};
  spec.name = "scaling";
  return spec;
}

}  // namespace

TEST_CASE("scaling action on R^2 loads and validates") {
  const char* json = R"({"dim_v": 2, "generators": [[1, 0, 0, -1]], "name": "scaling-r2"})";
  LinearAction act = load_action_from_json(json);
  CHECK(act.dim_v() == 2);
  CHECK(act.dim_g() == 1);
  CHECK(act.dim_k() == 0);
  CHECK(act.dim_p() == 1);
  CHECK(act.validation().transpose_residual < 1e-12);
  CHECK(act.validation().bracket_residual < 1e-12);
}

TEST_CASE("zero generators give the valid trivial action") {
  ActionSpec spec;
  spec.dim_v = 3;
  LinearAction act = LinearAction::from_spec(spec);
  CHECK(act.dim_g() == 0);
  CHECK(act.dim_k() == 0);
  CHECK(act.dim_p() == 0);
  CHECK(act.torus().dim_t() == 0);
  CHECK(act.torus().weights.cols() == 0);
}

TEST_CASE("sl2 conjugation splits into dim k = 1, dim p = 2") {
  LinearAction act = LinearAction::from_spec(sl2_conjugation_spec());
  CHECK(act.dim_g() == 3);
  CHECK(act.dim_k() == 1);
  CHECK(act.dim_p() == 2);
  // oracle: the transpose of the ad-operator is the ad-operator of the
  // transposed matrix, so skew generators of sl2 give the k-part
  MatrixXd j(2, 2);
  j << 0, 1, -1, 0;
  double res = 0.0;
  act.algebra_coords(ad_op(j), &res);
  CHECK(res < 1e-9);
  const auto& split = act.split();
  CHECK(split.bracket_kp_residual < 1e-9);
  CHECK(split.bracket_pp_residual < 1e-9);
}

TEST_CASE("cartan split of a single symmetric generator has empty k") {
  LinearAction act = LinearAction::from_spec(scaling_spec());
  CHECK(act.dim_k() == 0);
  CHECK(act.dim_p() == 1);
}

TEST_CASE("maximal torus of the scaling action has opposite weights") {
  LinearAction act = LinearAction::from_spec(scaling_spec());
  const auto& frame = act.torus();
  REQUIRE(frame.dim_t() == 1);
  REQUIRE(frame.n() == 2);
  CHECK(frame.weights(0, 0) == doctest::Approx(-frame.weights(1, 0)));
  // the generator diag(1,-1) has coordinate sqrt(2) in the torus basis, and
  // its eigenvalue on the +weight eigenvector must be +1
  VectorXd gen_coord(1);
  gen_coord << std::sqrt(2.0);
  VectorXd pair = frame.pairings(gen_coord);
  CHECK(std::abs(pair.cwiseAbs().maxCoeff() - 1.0) < 1e-12);
}

TEST_CASE("sl2 conjugation torus weights match the commutator oracle") {
  LinearAction act = LinearAction::from_spec(sl2_conjugation_spec());
  const auto& frame = act.torus();
  REQUIRE(frame.dim_t() == 1);
  // oracle: [diag(1,-1), E_ij] = (delta_i1 - delta_i2 - delta_j1 + delta_j2) E_ij
  // gives ad-eigenvalues {0, 2, -2, 0} on the basis E11, E12, E21, E22
  MatrixXd h(2, 2);
  h << 1, 0, 0, -1;
  double res = 0.0;
  VectorXd coords = act.algebra_coords(ad_op(h), &res);
  REQUIRE(res < 1e-9);
  VectorXd tcoords(1);
  tcoords << coords.tail(act.dim_p()).norm();
  VectorXd pair = frame.pairings(tcoords);
  std::vector<double> got(pair.data(), pair.data() + pair.size());
  std::sort(got.begin(), got.end());
  CHECK(got[0] == doctest::Approx(-2.0));
  CHECK(got[1] == doctest::Approx(0.0));
  CHECK(got[2] == doctest::Approx(0.0));
  CHECK(got[3] == doctest::Approx(2.0));
}

TEST_CASE("torus acting trivially has no weights") {
  // so(2) on R^2: k-only algebra, empty torus, all weights vacuously zero
  ActionSpec spec;
  spec.dim_v = 2;
  MatrixXd j(2, 2);
  j << 0, 1, -1, 0;
  spec.generators = {j};
  LinearAction act = LinearAction::from_spec(spec);
  CHECK(act.dim_k() == 1);
  CHECK(act.dim_p() == 0);
  CHECK(act.torus().dim_t() == 0);
}

TEST_CASE("eigenbasis relation holds for random torus elements") {
  LinearAction act = LinearAction::from_spec(sl2_conjugation_spec());
  const auto& frame = act.torus();
  detail::Rng rng(321);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd lambda = rng.normal_vector(frame.dim_t());
    MatrixXd op = MatrixXd::Zero(4, 4);
    for (int j = 0; j < frame.dim_t(); ++j) op += lambda[j] * frame.torus_ops[j];
    VectorXd pair = frame.pairings(lambda);
    for (int i = 0; i < frame.n(); ++i) {
      VectorXd vi = frame.v_basis.col(i);
      CHECK((op * vi - pair[i] * vi).norm() < 1e-9);
    }
  }
}

TEST_CASE("validation rejects a non-self-adjoint algebra") {
  ActionSpec spec;
  spec.dim_v = 2;
  spec.generators = {unit_mat(2, 0, 1)};  // E12 alone: transpose leaves the span
  CHECK_THROWS_AS(LinearAction::from_spec(spec), ValidationError);
  try {
    LinearAction::from_spec(spec);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("generator 0") != std::string::npos);
  }
}

TEST_CASE("validation rejects a bracket-closure failure") {
  ActionSpec spec;
  spec.dim_v = 2;
  MatrixXd h(2, 2), s(2, 2);
  h << 1, 0, 0, -1;
  s << 0, 1, 1, 0;
  spec.generators = {h, s};  // [h, s] = 2(E12 - E21) is skew, outside span{h, s}
  CHECK_THROWS_AS(LinearAction::from_spec(spec), ValidationError);
}

TEST_CASE("validation rejects dependent generators") {
  ActionSpec spec;
  spec.dim_v = 2;
  MatrixXd h(2, 2);
  h << 1, 0, 0, -1;
  spec.generators = {h, 2.0 * h};
  CHECK_THROWS_AS(LinearAction::from_spec(spec), ValidationError);
}

TEST_CASE("bad JSON reports a parse failure") {
  CHECK_THROWS_AS(load_action_from_json("{ not json"), ValidationError);
  CHECK_THROWS_AS(load_action_from_json(R"({"dim_v": 2})"), ValidationError);
  CHECK_THROWS_AS(load_action_from_json(R"({"dim_v": 2, "generators": [[1, 0]]})"),
                  ValidationError);
}

TEST_CASE("a non-identity metric on V is normalized away") {
  // conjugate the scaling action by S = [[1,1],[0,1]] and feed the matching
  // metric M = S^{-T} S^{-1}; the analysis must agree with the standard one
  MatrixXd s(2, 2), d(2, 2);
  s << 1, 1, 0, 1;
  d << 1, 0, 0, -1;
  MatrixXd sinv = s.inverse();
  ActionSpec spec;
  spec.dim_v = 2;
  spec.generators = {s * d * sinv};
  spec.inner_v = sinv.transpose() * sinv;
  LinearAction act = LinearAction::from_spec(spec);
  CHECK(act.dim_k() == 0);
  CHECK(act.dim_p() == 1);
  const auto& frame = act.torus();
  CHECK(frame.weights(0, 0) == doctest::Approx(-frame.weights(1, 0)));
  // round trip of the coordinate change
  VectorXd v(2);
  v << 0.3, -1.7;
  CHECK((act.from_internal(act.to_internal(v)) - v).norm() < 1e-12);
}

TEST_CASE("iwasawa factorization of the identity is trivial") {
  LinearAction act = LinearAction::from_spec(sl2_conjugation_spec());
  std::vector<std::vector<VectorXd>> samples{{VectorXd::Zero(3)}};
  auto rep = iwasawa_check(act, samples);
  REQUIRE(rep.samples.size() == 1);
  CHECK(rep.samples[0].ktn_residual < 1e-12);
  CHECK(rep.samples[0].ktk_residual < 1e-12);
  const int n = 4;
  CHECK((rep.samples[0].k_factor - MatrixXd::Identity(n, n)).norm() < 1e-10);
  CHECK((rep.samples[0].t_factor - MatrixXd::Identity(n, n)).norm() < 1e-10);
  CHECK((rep.samples[0].n_factor - MatrixXd::Identity(n, n)).norm() < 1e-10);
}

TEST_CASE("iwasawa factorization of exp(p) and exp(k) samples") {
  LinearAction act = LinearAction::from_spec(sl2_conjugation_spec());
  // a p-element: coordinates live in the [k | p] ordered basis
  VectorXd pel = VectorXd::Zero(3);
  pel[1] = 0.7;
  pel[2] = -0.3;
  VectorXd kel = VectorXd::Zero(3);
  kel[0] = 0.9;
  auto rep = iwasawa_check(act, {{pel}, {kel}});
  REQUIRE(rep.samples.size() == 2);
  CHECK(rep.samples[0].ktn_residual < 1e-9);
  CHECK(rep.samples[0].ktk_residual < 1e-9);
  CHECK(rep.samples[0].t_membership < 1e-9);
  CHECK(rep.samples[0].n_membership < 1e-9);
  CHECK(rep.samples[0].p_membership < 1e-9);
  // exp of a k-element is orthogonal: t and n collapse to the identity
  const int n = 4;
  CHECK((rep.samples[1].t_factor - MatrixXd::Identity(n, n)).norm() < 1e-9);
  CHECK((rep.samples[1].n_factor - MatrixXd::Identity(n, n)).norm() < 1e-9);
  CHECK(rep.ok);
}

TEST_CASE("iwasawa factors agree with a hand-rolled QL oracle") {
  LinearAction act = LinearAction::from_spec(sl2_conjugation_spec());
  detail::Rng rng(4242);
  std::vector<std::vector<VectorXd>> samples;
  for (int i = 0; i < 5; ++i)
    samples.push_back({0.5 * rng.normal_vector(3), 0.5 * rng.normal_vector(3)});
  auto rep = iwasawa_check(act, samples);
  CHECK(rep.ok);

  const auto& frame = act.torus();
  for (std::size_t si = 0; si < samples.size(); ++si) {
    MatrixXd g = MatrixXd::Identity(4, 4);
    for (const auto& c : samples[si]) g = g * detail::expm(act.algebra_op(c));
    MatrixXd m = frame.v_basis.transpose() * g * frame.v_basis;
    // Gram-Schmidt the columns right-to-left: produces the same Q L split
    MatrixXd q = MatrixXd::Zero(4, 4);
    MatrixXd l = MatrixXd::Zero(4, 4);
    for (int j = 3; j >= 0; --j) {
      VectorXd col = m.col(j);
      for (int k = 3; k > j; --k) {
        l(k, j) = q.col(k).dot(m.col(j));
        col -= l(k, j) * q.col(k);
      }
      l(j, j) = col.norm();
      q.col(j) = col / l(j, j);
    }
    CHECK((q - rep.samples[si].k_factor).norm() < 1e-8);
    CHECK((l - rep.samples[si].t_factor * rep.samples[si].n_factor).norm() < 1e-8);
  }
}
