#pragma once

#include <optional>
#include <vector>

#include "ldp/riccati.hpp"

namespace ldp {

// E(lambda): the affine part of the gradient equation D'p2 + E = 0.
Vector affine_gradient_rhs(const AffineModel& model, const RiccatiSolution& riccati);

// Solves D(lambda)' p2 + E(lambda) = 0. Requires stable D, or semistable D
// with E in the range of D' (least-squares consistent); otherwise throws
// UnsolvableError.
Vector solve_p2(const AffineModel& model, const RiccatiSolution& riccati);

// Growth rate F(lambda); +inf past the Riccati threshold or when the
// gradient equation is unsolvable. F(lambda_bar) at the boundary is a left
// limit (Richardson extrapolation in sqrt(lambda_bar - lambda)).
double eval_F(const AffineModel& model, double lambda);

// Riccati threshold: min(1/tilde_beta, 1) closed form for l = 1, bisection
// on root existence + stability otherwise. A lower bound for the true
// blow-up threshold in general.
double lambda_bar(const AffineModel& model);

struct RateCurve {
  AffineModel model;
  std::vector<double> lambdas;
  std::vector<double> F;    // +inf markers past lambda_bar
  std::vector<double> dF;   // central differences; NaN where undefined
  std::vector<Vector> p2;   // empty vector where F = +inf
  std::vector<std::optional<RiccatiSolution>> riccati;
  double lambda_bar = 0.0;
};

RateCurve build_rate_curve(const AffineModel& model, double lambda_min,
                           double lambda_max, int n_points);

struct DecaySolution {
  double q = 0.0;
  double lambda_hat = 0.0;
  double J = 0.0;        // sup over lambda <= 1
  double J_out = 0.0;    // sup over [0, 1]
  double J_short = 0.0;  // sup over (-inf, 0]
  bool degenerate = false;            // lambda_hat = 1 = lambda_bar
  double saddle_certificate = 0.0;    // |lambda_hat q - F(lambda_hat) - J|
};

DecaySolution decay_rates(const RateCurve& curve, double q);

// Optimal feedback u(x) = G x + g0, or the degenerate-branch control
// u(x) = c^{-1} b (beta + vhat) with vhat = b' c^{-1/2} z * vhat_magnitude.
struct AffinePortfolio {
  bool degenerate = false;
  Matrix G;   // n x l
  Vector g0;  // n
  double vhat_magnitude = 0.0;  // sqrt(2 (q - F'(1-)))
  Vector z;   // unit n-vector steering vhat

  Vector eval(const Vector& x, const AffineModel& model) const;
};

AffinePortfolio optimal_portfolio(const AffineModel& model, double q);

// Feedback at a fixed risk-sensitivity (regular branch only).
AffinePortfolio portfolio_at_lambda(const AffineModel& model, double lambda);

struct GaussianInvariantMeasure {
  Vector mean;
  Matrix covariance;
};

// Stationary law of the tilted factor diffusion; requires stable D(lambda).
GaussianInvariantMeasure invariant_measure(const AffineModel& model, double lambda);

// Constant drift of the tilted factor diffusion (the dt-vector next to
// D(lambda) Y_t in its SDE).
Vector tilted_drift_constant(const AffineModel& model,
                             const RiccatiSolution& riccati, const Vector& p2);

// Numerical derivative of F by central differences, h in lambda.
double eval_dF(const AffineModel& model, double lambda, double h = 1e-6);

// Left limit of F at lambda_bar via Richardson extrapolation on
// sqrt(lambda_bar - lambda) spacing; +inf when the curve blows up.
double F_left_limit_at_bar(const AffineModel& model);

// Left derivative dF/dlambda at lambda = 1 for the degenerate branch.
double dF_left_at_one(const AffineModel& model);

}  // namespace ldp
