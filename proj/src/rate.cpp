#include "ldp/rate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "ldp/errors.hpp"

namespace ldp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector excess_drift(const AffineModel& model) {
  return model.a2 - model.r2 * Vector::Ones(model.n());
}

Matrix excess_sensitivity(const AffineModel& model) {
  return model.A1 - Vector::Ones(model.n()) * model.r1.transpose();
}

// F(lambda) from a solved Riccati root and gradient vector.
double F_from_parts(const AffineModel& model, double lambda,
                    const RiccatiSolution& ric, const Vector& p2) {
  const double mu = lambda / (1.0 - lambda);
  const Matrix ss = model.sigma * model.sigma.transpose();
  const Vector w = excess_drift(model) - lambda * model.b * model.beta +
                   model.b * model.sigma.transpose() * p2;
  Eigen::LLT<Matrix> llt(model.c());
  const double beta_sq = model.beta.squaredNorm();
  return 0.5 * p2.dot(ss * p2) + 0.5 * mu * w.dot(llt.solve(w)) +
         (-lambda * model.sigma * model.beta + model.theta2).dot(p2) +
         lambda * (model.r2 - model.alpha2 + 0.5 * beta_sq) +
         0.5 * lambda * lambda * beta_sq + 0.5 * (ss * ric.P1).trace();
}

// Interior evaluation; infinity encoded in the return value.
double eval_F_interior(const AffineModel& model, double lambda) {
  if (lambda >= 1.0) return kInf;
  try {
    const RiccatiSolution ric = solve_riccati(model, lambda);
    const Vector p2 = solve_p2(model, ric);
    return F_from_parts(model, lambda, ric, p2);
  } catch (const NumericalError&) {
    return kInf;
  }
}

struct DecayContext {
  const AffineModel* model;
  double lambda_bar_value;

  double F(double lambda) const {
    if (lambda > lambda_bar_value + 1e-12) return kInf;
    return eval_F_interior(*model, lambda);
  }
  double phi(double lambda, double q) const {
    const double f = F(lambda);
    return std::isfinite(f) ? lambda * q - f : kNegInf;
  }
};

DecaySolution decay_for(const AffineModel& model, double q) {
  DecayContext ctx{&model, lambda_bar(model)};
  const double hi = std::min(ctx.lambda_bar_value, 1.0);

  // Bracket the concave maximizer of lambda q - F(lambda) from the left.
  double lo = -1.0;
  int extensions = 0;
  for (;;) {
    const double step = 1e-4 * (1.0 + std::abs(lo));
    if (ctx.phi(lo + step, q) >= ctx.phi(lo, q)) break;
    lo *= 2.0;
    if (++extensions > 60)
      throw NotAttainedError(
          "decay objective still increasing toward lambda = -inf");
  }

  // Golden section; endpoints may evaluate to -inf (past the threshold).
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = ctx.phi(x1, q), f2 = ctx.phi(x2, q);
  // Relative tolerance: an absolute one stalls below the ulp when the
  // maximizer sits at a large magnitude.
  int iters = 0;
  while (b - a > 1e-10 * (1.0 + std::max(std::abs(a), std::abs(b))) &&
         ++iters < 300) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = ctx.phi(x2, q);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = ctx.phi(x1, q);
    }
  }

  DecaySolution out;
  out.q = q;
  out.lambda_hat = 0.5 * (a + b);
  if (std::abs(out.lambda_hat) < 1e-9) out.lambda_hat = 0.0;
  out.J = ctx.phi(out.lambda_hat, q);

  // Boundary resolution at lambda = 1: the curve may be finite there with an
  // unattained slope, in which case the supremum sits at the endpoint.
  if (ctx.lambda_bar_value >= 1.0 - 1e-12 && out.lambda_hat > 1.0 - 1e-6 &&
      model.n() == 1 && model.l() == 1) {
    const ScalarCaseAnalysis sc =
        classify_scalar_case(ScalarModel::from_affine(model), q);
    if (sc.scalar_case == ScalarCase::BetaEq1_Degenerate && sc.lambda_hat_is_one) {
      out.lambda_hat = 1.0;
      out.J = q - sc.F_at_bar;
      out.degenerate = true;
    }
  }

  if (out.J < 0.0 && out.J > -1e-12) out.J = 0.0;
  if (out.lambda_hat > 0.0) {
    out.J_out = out.J;
    out.J_short = 0.0;
  } else if (out.lambda_hat < 0.0) {
    out.J_short = out.J;
    out.J_out = 0.0;
  } else {
    out.J_out = out.J_short = 0.0;
  }

  const double F_hat = out.degenerate
                           ? F_left_limit_at_bar(model)
                           : ctx.F(out.lambda_hat);
  out.saddle_certificate = std::abs(out.lambda_hat * q - F_hat - out.J);
  return out;
}

}  // namespace

Vector affine_gradient_rhs(const AffineModel& model,
                           const RiccatiSolution& riccati) {
  const double lambda = riccati.lambda;
  const double mu = lambda / (1.0 - lambda);
  const Matrix lin = excess_sensitivity(model) +
                     model.b * model.sigma.transpose() * riccati.P1;  // n x l
  Eigen::LLT<Matrix> llt(model.c());
  const Vector w = excess_drift(model) - lambda * model.b * model.beta;
  return mu * lin.transpose() * llt.solve(w) +
         lambda * (model.r1 - model.alpha1 -
                   riccati.P1 * model.sigma * model.beta) +
         riccati.P1 * model.theta2;
}

Vector solve_p2(const AffineModel& model, const RiccatiSolution& riccati) {
  const Vector E = affine_gradient_rhs(model, riccati);
  const Matrix Dt = riccati.D.transpose();
  if (riccati.stable) {
    Eigen::FullPivLU<Matrix> lu(Dt);
    return lu.solve(-E);
  }
  // Semistable boundary: solvable only when E is consistent with range(D').
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Dt);
  const Vector p2 = cod.solve(-E);
  if ((Dt * p2 + E).norm() > 1e-8 * (1.0 + E.norm()))
    throw UnsolvableError(
        "gradient equation inconsistent at the semistable boundary");
  return p2;
}

double lambda_bar(const AffineModel& model) {
  if (model.n() == 1 && model.l() == 1) {
    const double tb = tilde_beta(ScalarModel::from_affine(model));
    return tb > 1.0 ? 1.0 / tb : 1.0;
  }
  auto solvable = [&](double lambda) {
    try {
      return solve_riccati(model, lambda).stable;
    } catch (const NumericalError&) {
      return false;
    }
  };
  double hi = 1.0 - 1e-9;
  if (solvable(hi)) return 1.0;
  double lo = 0.0;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (solvable(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double eval_F(const AffineModel& model, double lambda) {
  const double bar = lambda_bar(model);
  if (lambda > bar + 1e-12) return kInf;
  if (lambda > bar - 1e-12) return F_left_limit_at_bar(model);
  return eval_F_interior(model, lambda);
}

double F_left_limit_at_bar(const AffineModel& model) {
  const double bar = lambda_bar(model);
  const double eps = 1e-8;
  const double f1 = eval_F_interior(model, bar - eps);
  const double f2 = eval_F_interior(model, bar - 4.0 * eps);
  const double f3 = eval_F_interior(model, bar - 16.0 * eps);
  if (!std::isfinite(f1) || !std::isfinite(f2) || !std::isfinite(f3)) return kInf;
  // A finite left limit has sqrt-spaced samples nearly equal; divergence
  // like 1/(bar - lambda) shows up as a large relative gap.
  if (std::abs(f1 - f2) > 0.5 * (1.0 + std::abs(f1))) return kInf;
  // Richardson step removing the sqrt and linear terms in (bar - lambda).
  return (8.0 * f1 - 6.0 * f2 + f3) / 3.0;
}

RateCurve build_rate_curve(const AffineModel& model, double lambda_min,
                           double lambda_max, int n_points) {
  if (n_points < 2 || lambda_min >= lambda_max)
    throw ValidationError("rate curve needs lambda_min < lambda_max, n >= 2");
  RateCurve curve;
  curve.model = model;
  curve.lambda_bar = lambda_bar(model);
  curve.lambdas.resize(n_points);
  curve.F.resize(n_points);
  curve.p2.resize(n_points);
  curve.riccati.resize(n_points);
  const double dl = (lambda_max - lambda_min) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double lam = lambda_min + i * dl;
    curve.lambdas[i] = lam;
    curve.F[i] = kInf;
    if (lam > curve.lambda_bar + 1e-12 || lam >= 1.0) continue;
    try {
      RiccatiSolution ric = solve_riccati(model, lam);
      const Vector p2 = solve_p2(model, ric);
      curve.F[i] = F_from_parts(model, lam, ric, p2);
      curve.p2[i] = p2;
      curve.riccati[i] = std::move(ric);
    } catch (const NumericalError&) {
    }
  }
  curve.dF.assign(n_points, std::numeric_limits<double>::quiet_NaN());
  for (int i = 1; i + 1 < n_points; ++i)
    if (std::isfinite(curve.F[i - 1]) && std::isfinite(curve.F[i + 1]))
      curve.dF[i] = (curve.F[i + 1] - curve.F[i - 1]) / (2.0 * dl);
  return curve;
}

DecaySolution decay_rates(const RateCurve& curve, double q) {
  return decay_for(curve.model, q);
}

Vector AffinePortfolio::eval(const Vector& x, const AffineModel& model) const {
  if (!degenerate) return G * x + g0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.c());
  const Matrix c_inv_sqrt =
      es.operatorInverseSqrt();
  const Vector vhat =
      model.b.transpose() * c_inv_sqrt * z * vhat_magnitude;
  Eigen::LLT<Matrix> llt(model.c());
  return llt.solve(model.b * (model.beta + vhat));
}

AffinePortfolio portfolio_at_lambda(const AffineModel& model, double lambda) {
  if (lambda >= 1.0)
    throw DomainError("regular portfolio branch requires lambda < 1");
  const RiccatiSolution ric = solve_riccati(model, lambda);
  const Vector p2 = solve_p2(model, ric);
  Eigen::LLT<Matrix> llt(model.c());
  AffinePortfolio p;
  p.degenerate = false;
  const double s = 1.0 / (1.0 - lambda);
  p.G = s * llt.solve(excess_sensitivity(model) +
                      model.b * model.sigma.transpose() * ric.P1);
  p.g0 = s * llt.solve(excess_drift(model) - lambda * model.b * model.beta +
                       model.b * model.sigma.transpose() * p2);
  p.z = Vector::Unit(model.n(), 0);
  return p;
}

AffinePortfolio optimal_portfolio(const AffineModel& model, double q) {
  const DecaySolution d = decay_for(model, q);
  if (!d.degenerate) return portfolio_at_lambda(model, d.lambda_hat);
  const double slope = dF_left_at_one(model);
  const double radicand = 2.0 * (q - slope);
  if (radicand < -1e-12)
    throw DegenerateInfeasibleError(
        "target rate below the boundary slope in the degenerate branch");
  AffinePortfolio p;
  p.degenerate = true;
  p.G = Matrix::Zero(model.n(), model.l());
  p.g0 = Vector::Zero(model.n());
  p.vhat_magnitude = std::sqrt(std::max(radicand, 0.0));
  p.z = Vector::Unit(model.n(), 0);
  return p;
}

Vector tilted_drift_constant(const AffineModel& model,
                             const RiccatiSolution& riccati, const Vector& p2) {
  const double lambda = riccati.lambda;
  const double mu = lambda / (1.0 - lambda);
  Eigen::LLT<Matrix> llt(model.c());
  const Vector w = excess_drift(model) - lambda * model.b * model.beta +
                   model.b * model.sigma.transpose() * p2;
  return mu * model.sigma * model.b.transpose() * llt.solve(w) -
         lambda * model.sigma * model.beta +
         model.sigma * model.sigma.transpose() * p2 + model.theta2;
}

GaussianInvariantMeasure invariant_measure(const AffineModel& model,
                                           double lambda) {
  const RiccatiSolution ric = solve_riccati(model, lambda);
  if (!ric.stable)
    throw UnstableError("tilted factor matrix D(lambda) is not Hurwitz");
  const Vector p2 = solve_p2(model, ric);
  const Vector drift = tilted_drift_constant(model, ric, p2);
  GaussianInvariantMeasure m;
  Eigen::FullPivLU<Matrix> lu(ric.D);
  m.mean = lu.solve(-drift);
  // D Sigma + Sigma D' = -sigma sigma'.
  m.covariance = solve_sylvester_small(
      ric.D.transpose(), model.sigma * model.sigma.transpose());
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
  return m;
}

double eval_dF(const AffineModel& model, double lambda, double h) {
  return (eval_F(model, lambda + h) - eval_F(model, lambda - h)) / (2.0 * h);
}

double dF_left_at_one(const AffineModel& model) {
  if (model.n() == 1 && model.l() == 1) {
    const ScalarCaseAnalysis sc =
        classify_scalar_case(ScalarModel::from_affine(model), 0.0);
    if (sc.scalar_case == ScalarCase::BetaEq1_Degenerate)
      return sc.left_derivative_at_bar;
  }
  const double h = 1e-5;
  const double F1 = F_left_limit_at_bar(model);
  return (3.0 * F1 - 4.0 * eval_F_interior(model, 1.0 - h) +
          eval_F_interior(model, 1.0 - 2.0 * h)) /
         (2.0 * h);
}

}  // namespace ldp
