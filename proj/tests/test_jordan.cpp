#include "gen.hpp"

#include "trigrate/jordan.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

using namespace trigrate;

TEST_CASE("exp_block worked values") {
  const double e = 2.718281828459045;
  CHECK(exp_block(1.0, 2, 0.0).isApprox(Eigen::Matrix2d::Identity()));
  const auto m = exp_block(1.0, 2, 1.0);
  CHECK(gen::rel(m(0, 0), e) < 1e-15);
  CHECK(gen::rel(m(0, 1), e) < 1e-15);
  CHECK(gen::rel(m(1, 1), e) < 1e-15);
  CHECK(m(1, 0) == 0.0);
  CHECK(gen::rel(exp_block(0.5, 1, 2.0)(0, 0), e) < 1e-15);
  CHECK_THROWS_AS(exp_block(1.0, 0, 1.0), std::invalid_argument);
}

TEST_CASE("exp_block entries follow t^k/k! e^{lambda t}") {
  const auto m = exp_block(0.7, 4, 1.3);
  const double c = std::exp(0.7 * 1.3);
  CHECK(gen::rel(m(0, 3), c * std::pow(1.3, 3) / 6.0) < 1e-14);
  CHECK(gen::rel(m(1, 3), c * 1.3 * 1.3 / 2.0) < 1e-14);
  CHECK(m(3, 0) == 0.0);
}

TEST_CASE("exp_block works on long double") {
  const auto m = exp_block<long double>(1.0L, 2, 1.0L);
  CHECK(std::abs(m(0, 1) - std::exp(1.0L)) < 1e-18L);
}

TEST_CASE("JordanSpec layout and validation") {
  const JordanSpec s({{1.0, 2}, {2.0, 1}});
  CHECK(s.n() == 3);
  CHECK(s.q() == 2);
  CHECK(s.trace() == doctest::Approx(4.0));
  CHECK(s.offset(1) == 2);
  CHECK(s.coord(2) == CoordId{1, 0});
  CHECK(s.flat({0, 1}) == 1);
  CHECK(s.lambda_of(2) == 2.0);
  CHECK(s.shifted(0.5).trace() == doctest::Approx(5.5));
  const Eigen::MatrixXd A = s.matrix();
  CHECK(A(0, 1) == 1.0);
  CHECK(A(1, 0) == 0.0);
  CHECK(A(2, 2) == 2.0);
  CHECK_THROWS(JordanSpec({{0.0, 1}}));
  CHECK_THROWS(JordanSpec({{-1.0, 1}}));
  CHECK_THROWS(JordanSpec({{1.0, 0}}));
  CHECK_THROWS(JordanSpec(std::vector<JordanBlock>{}));
}

TEST_CASE("propagate_error worked values") {
  const auto scalar = JordanSpec::scalar(1.0);
  StateVec z{Eigen::VectorXd::Constant(1, 0.5), 0.0};
  CHECK(propagate_error(scalar, z, std::numbers::ln2).coords[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(propagate_error(scalar, z, 0.0).coords[0] == 0.5);
  const JordanSpec block({{1.0, 2}});
  StateVec zb{Eigen::Vector2d(0.0, 1.0), 0.0};
  const auto out = propagate_error(block, zb, 1.0);
  CHECK(gen::rel(out.coords[0], 2.718281828459045) < 1e-15);
  CHECK(gen::rel(out.coords[1], 2.718281828459045) < 1e-15);
  CHECK(out.time == 1.0);
  CHECK_THROWS(propagate_error(block, StateVec{zb.coords, 2.0}, 1.0));
}

TEST_CASE("entropy_rate worked values") {
  CHECK(entropy_rate(JordanSpec::scalar(std::numbers::ln2)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(gen::rel(entropy_rate(JordanSpec({{1.0, 1}, {2.0, 1}})), 4.328085122666890) < 1e-14);
  CHECK(gen::rel(entropy_rate(JordanSpec({{1.0, 2}})), 2.885390081777927) < 1e-14);
}

TEST_CASE("closed-loop propagation") {
  const auto scalar = JordanSpec::scalar(1.0);
  SUBCASE("scalar a=1, kappa=2 decays as e^{-2t}") {
    StateVec x{Eigen::VectorXd::Ones(1), 0.0};
    const auto [x1, xh1] = propagate_closed_loop(scalar, ControllerGain{2.0}, x, x, 1.0);
    CHECK(gen::rel(x1.coords[0], 0.1353352832366127) < 1e-10);
    CHECK(gen::rel(xh1.coords[0], 0.1353352832366127) < 1e-10);
    CHECK(x1.time == 1.0);
  }
  SUBCASE("x - xhat agrees with the exact error propagator") {
    gen::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const auto spec = rng.spec();
      StateVec x{rng.vec(spec.n()), 0.3};
      StateVec xh{rng.vec(spec.n()), 0.3};
      const auto [x1, xh1] = propagate_closed_loop(spec, ControllerGain{1.0}, x, xh, 1e-3);
      const auto z1 = propagate_error(spec, StateVec{x.coords - xh.coords, 0.3}, 0.3 + 1e-3);
      CHECK((x1.coords - xh1.coords - z1.coords).lpNorm<Eigen::Infinity>() < 1e-8);
    }
  }
  SUBCASE("closed-loop matrix is -kappa I") {
    // With z = 0 both trajectories coincide.
    const JordanSpec s({{1.0, 3}});
    StateVec x{Eigen::Vector3d(0.3, -0.2, 0.9), 0.0};
    const auto [x1, xh1] = propagate_closed_loop(s, ControllerGain{1.5}, x, x, 0.7);
    CHECK((x1.coords - xh1.coords).norm() < 1e-12);
    CHECK((x1.coords - std::exp(-1.5 * 0.7) * x.coords).norm() < 1e-10);
  }
  CHECK_THROWS(propagate_closed_loop(scalar, ControllerGain{}, StateVec{Eigen::VectorXd::Ones(1), 0.0},
                                     StateVec{Eigen::VectorXd::Ones(1), 0.0}, 0.0));
  ClosedLoopIntegrator integ(scalar, ControllerGain{}, 1e-3);
  Eigen::VectorXd a = Eigen::VectorXd::Ones(1), b = Eigen::VectorXd::Ones(1);
  CHECK_THROWS(integ.advance(a, b, -1.0));
}

TEST_CASE("property: semigroup of exp_block") {
  gen::Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = rng.uniform(0.05, 2.0);
    const int d = rng.integer(1, 4);
    const double s = rng.uniform(0.0, 3.0), t = rng.uniform(0.0, 3.0);
    const Eigen::MatrixXd lhs = exp_block(lambda, d, s + t);
    const Eigen::MatrixXd rhs = exp_block(lambda, d, s) * exp_block(lambda, d, t);
    CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
  }
}

TEST_CASE("property: det(e^{At}) = e^{Tr(A) t}") {
  gen::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto spec = rng.spec();
    const double t = rng.uniform(0.0, 3.0);
    CHECK(gen::rel(exp_jordan(spec, t).determinant(), std::exp(spec.trace() * t)) < 1e-10);
  }
}

TEST_CASE("property: exp_jordan matches a generic matrix exponential") {
  gen::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = rng.spec();
    const double t = rng.uniform(0.0, 2.0);
    const Eigen::MatrixXd ref = (spec.matrix() * t).exp();
    CHECK((exp_jordan(spec, t) - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("property: propagate_coordinate and apply_jordan agree with the dense forms") {
  gen::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto spec = rng.spec();
    const Eigen::VectorXd z = rng.vec(spec.n());
    const double s = rng.uniform(0.0, 3.0);
    const Eigen::VectorXd dense = exp_jordan(spec, s) * z;
    for (int f = 0; f < spec.n(); ++f)
      CHECK(std::abs(propagate_coordinate(spec, z, f, s) - dense[f]) <= 1e-12 * (1.0 + dense.lpNorm<Eigen::Infinity>()));
    Eigen::VectorXd az(spec.n());
    apply_jordan(spec, z, az);
    CHECK((az - spec.matrix() * z).norm() < 1e-14);
  }
}

TEST_CASE("property: scalar blocks expand by exactly e^{lambda dt}") {
  gen::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double lambda = rng.uniform(0.05, 3.0);
    const double z0 = rng.uniform(-2.0, 2.0), t = rng.uniform(0.0, 5.0);
    const auto out = propagate_error(JordanSpec::scalar(lambda), StateVec{Eigen::VectorXd::Constant(1, z0), 0.0}, t);
    CHECK(gen::rel(std::abs(out.coords[0]), std::exp(lambda * t) * std::abs(z0)) < 1e-14);
  }
}
