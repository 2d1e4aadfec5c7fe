#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "ldp/errors.hpp"
#include "ldp/rate.hpp"

using namespace ldp;

namespace {

AffineModel instance_r() {
  AffineModel m;
  m.A1 = Matrix::Constant(1, 1, 0.5);
  m.a2 = Vector::Constant(1, 0.1);
  m.r1 = Vector::Zero(1);
  m.r2 = 0.0;
  m.alpha1 = Vector::Zero(1);
  m.alpha2 = 0.0;
  m.Theta1 = Matrix::Constant(1, 1, -1.0);
  m.theta2 = Vector::Zero(1);
  m.b = Matrix::Zero(1, 3);
  m.b(0, 0) = 1.0;
  m.beta = Vector::Zero(3);
  m.beta(2) = 1.0;
  m.sigma = Matrix::Zero(1, 3);
  m.sigma(0, 1) = 1.0;
  return m;
}

AffineModel instance_beta_lt1() {
  AffineModel m = instance_r();
  m.sigma(0, 0) = -0.5;
  m.sigma(0, 1) = std::sqrt(0.75);
  return m;
}

AffineModel random_instance(std::mt19937& gen) {
  std::normal_distribution<double> nd;
  AffineModel m = instance_r();
  m.A1(0, 0) = 0.5 * nd(gen);
  m.a2(0) = 0.2 * nd(gen);
  m.r1(0) = 0.1 * nd(gen);
  m.r2 = 0.05 * nd(gen);
  m.alpha1(0) = 0.1 * nd(gen);
  m.alpha2 = 0.05 * nd(gen);
  m.Theta1(0, 0) = -0.5 - std::abs(nd(gen));
  m.theta2(0) = 0.2 * nd(gen);
  return m;
}

// F(-1) by hand for instance R: P1 = 1 - sqrt(9/8), p2 = -0.025/sqrt(9/8),
// F = p2^2/2 - mu a2^2 / 2 + P1/2 with mu = -1/2.
const double kP1 = 1.0 - std::sqrt(1.125);
const double kP2 = -0.025 / std::sqrt(1.125);
const double kF = 0.5 * kP2 * kP2 - 0.25 * 0.01 + 0.5 * (kP1 - 1.0) + 0.5;

}  // namespace

TEST_CASE("gradient equation right-hand side on the reference instance") {
  const AffineModel m = instance_r();
  const RiccatiSolution ric = solve_riccati(m, -1.0);
  const Vector e = affine_gradient_rhs(m, ric);
  CHECK(e(0) == doctest::Approx(-0.025).epsilon(1e-12));
  const Vector p2 = solve_p2(m, ric);
  CHECK(p2(0) == doctest::Approx(kP2).epsilon(1e-12));
  CHECK((ric.D.transpose() * p2 + e).norm() < 1e-14);
}

TEST_CASE("F vanishes at lambda = 0") {
  CHECK(std::abs(eval_F(instance_r(), 0.0)) < 1e-12);
  std::mt19937 gen(5);
  for (int trial = 0; trial < 20; ++trial)
    CHECK(std::abs(eval_F(random_instance(gen), 0.0)) < 1e-12);
}

TEST_CASE("F at lambda = -1 matches the hand value") {
  CHECK(eval_F(instance_r(), -1.0) == doctest::Approx(kF).epsilon(1e-12));
  CHECK(kF == doctest::Approx(-0.0325523081).epsilon(1e-7));
}

TEST_CASE("threshold detection") {
  CHECK(std::abs(lambda_bar(instance_r()) - 0.8) < 1e-8);
  CHECK(lambda_bar(instance_beta_lt1()) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("F is infinite past the threshold") {
  CHECK(eval_F(instance_r(), 0.85) == kInf);
  CHECK(eval_F(instance_r(), 0.999) == kInf);
}

TEST_CASE("rate curve markers and convexity") {
  const RateCurve curve = build_rate_curve(instance_r(), -3.0, 0.99, 161);
  CHECK(curve.lambda_bar == doctest::Approx(0.8).epsilon(1e-7));
  for (std::size_t i = 0; i + 2 < curve.F.size(); ++i) {
    if (!std::isfinite(curve.F[i]) || !std::isfinite(curve.F[i + 2])) continue;
    CHECK(curve.F[i] - 2.0 * curve.F[i + 1] + curve.F[i + 2] >= -1e-8);
  }
  for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
    const bool finite = std::isfinite(curve.F[i]);
    CHECK(finite == (curve.lambdas[i] <= curve.lambda_bar + 1e-12));
    if (finite) CHECK(curve.p2[i].size() == 1);
  }
}

TEST_CASE("numerical derivative is consistent with the secant") {
  const AffineModel m = instance_r();
  const double d = eval_dF(m, -1.0);
  const double secant = (eval_F(m, -1.0 + 1e-4) - eval_F(m, -1.0 - 1e-4)) / 2e-4;
  CHECK(d == doctest::Approx(secant).epsilon(1e-6));
}

TEST_CASE("decay rates satisfy the Legendre tangency") {
  const AffineModel m = instance_r();
  const RateCurve curve = build_rate_curve(m, -1.0, 0.0, 2);
  for (const double lambda0 : {-2.0, -1.0, -0.3, 0.3, 0.6}) {
    const double q = eval_dF(m, lambda0);
    const DecaySolution d = decay_rates(curve, q);
    CHECK(d.lambda_hat == doctest::Approx(lambda0).epsilon(1e-5));
    CHECK(d.J ==
          doctest::Approx(lambda0 * q - eval_F(m, lambda0)).epsilon(1e-7));
    CHECK(d.saddle_certificate < 1e-8);
    if (lambda0 < 0.0) {
      CHECK(d.J_short == doctest::Approx(d.J).epsilon(1e-9));
      CHECK(d.J_out == 0.0);
    } else {
      CHECK(d.J_out == doctest::Approx(d.J).epsilon(1e-9));
      CHECK(d.J_short == 0.0);
    }
  }
}

TEST_CASE("shortfall rate at the hand-computed slope") {
  const RateCurve curve = build_rate_curve(instance_r(), -1.0, 0.0, 2);
  const double q = eval_dF(instance_r(), -1.0);
  const DecaySolution d = decay_rates(curve, q);
  CHECK(d.J_short == doctest::Approx(-q - kF).epsilon(1e-7));
  CHECK(d.J_short == doctest::Approx(0.5168333081).epsilon(1e-6));
}

TEST_CASE("decay at q equal to F'(0) gives a zero rate") {
  const RateCurve curve = build_rate_curve(instance_r(), -1.0, 0.0, 2);
  const DecaySolution d = decay_rates(curve, eval_dF(instance_r(), 0.0));
  CHECK(std::abs(d.lambda_hat) < 1e-5);
  CHECK(std::abs(d.J) < 1e-8);
}

TEST_CASE("boundary asymptotics for tilde beta below one") {
  const AffineModel m = instance_beta_lt1();
  // |Theta1| sqrt(1 - tilde_beta) ssq c / (2 sb^2) with sb = -1/2.
  const double constant = 1.0 * std::sqrt(0.25) * 1.0 / (2.0 * 0.25);
  const double F1 = F_left_limit_at_bar(m);
  CHECK(std::isfinite(F1));
  const double eps = 1e-6;
  const double ratio = (F1 - eval_F(m, 1.0 - eps)) / std::sqrt(eps);
  CHECK(ratio == doctest::Approx(constant).epsilon(0.01));
}

TEST_CASE("portfolio at a fixed risk sensitivity") {
  const AffineModel m = instance_r();
  const AffinePortfolio p0 = portfolio_at_lambda(m, 0.0);
  CHECK_FALSE(p0.degenerate);
  CHECK(p0.G(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p0.g0(0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(p0.eval(Vector::Constant(1, 2.0), m)(0) == doctest::Approx(1.1));

  // b sigma' = 0 on R, so P1 and p2 drop out of the feedback.
  const AffinePortfolio p1 = portfolio_at_lambda(m, -1.0);
  CHECK(p1.G(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p1.g0(0) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("optimal portfolio matches the tangent risk sensitivity") {
  const AffineModel m = instance_r();
  const double q = eval_dF(m, -1.0);
  const AffinePortfolio p = optimal_portfolio(m, q);
  const AffinePortfolio ref = portfolio_at_lambda(m, -1.0);
  CHECK_FALSE(p.degenerate);
  CHECK(p.G(0, 0) == doctest::Approx(ref.G(0, 0)).epsilon(1e-4));
  CHECK(p.g0(0) == doctest::Approx(ref.g0(0)).epsilon(1e-4));
}

TEST_CASE("invariant measure of the tilted factor at lambda = -1") {
  const GaussianInvariantMeasure inv = invariant_measure(instance_r(), -1.0);
  CHECK(inv.mean(0) == doctest::Approx(-1.0 / 45.0).epsilon(1e-10));
  CHECK(inv.covariance(0, 0) ==
        doctest::Approx(0.5 / std::sqrt(1.125)).epsilon(1e-10));
}

TEST_CASE("invariant measure requires a stable tilt") {
  CHECK_THROWS_AS(invariant_measure(instance_r(), 0.8), UnstableError);
}

TEST_CASE("tilted drift constant on the reference instance") {
  const AffineModel m = instance_r();
  const RiccatiSolution ric = solve_riccati(m, -1.0);
  const Vector p2 = solve_p2(m, ric);
  const Vector drift = tilted_drift_constant(m, ric, p2);
  CHECK(drift(0) == doctest::Approx(kP2).epsilon(1e-12));
}

TEST_CASE("left limit at the threshold diverges for the reference instance") {
  CHECK(F_left_limit_at_bar(instance_r()) == kInf);
}
