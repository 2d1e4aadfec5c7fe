#include "ldp/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "ldp/errors.hpp"
#include "ldp/rate.hpp"

namespace ldp {
namespace {

double mu_of(double lambda) { return lambda / (1.0 - lambda); }

Definiteness classify_definiteness(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (hi <= kTolRiccati) return Definiteness::NegativeSemiDef;
  if (lo >= -kTolRiccati) return Definiteness::PositiveSemiDef;
  return Definiteness::Indefinite;
}

double riccati_residual(const RiccatiCoefficients& co, double mu, const Matrix& P) {
  const Matrix R = P * co.B * P + co.A.transpose() * P + P * co.A + mu * co.C;
  return R.norm();
}

void finish_solution(const AffineModel& model, double lambda,
                     const RiccatiCoefficients& co, RiccatiSolution& sol) {
  sol.D = co.A + co.B * sol.P1;
  Eigen::EigenSolver<Matrix> es(sol.D);
  const double max_re = es.eigenvalues().real().maxCoeff();
  sol.stable = max_re < -kTolRiccati;
  sol.semistable = !sol.stable && max_re < kTolRiccati;
  sol.definiteness = classify_definiteness(sol.P1);
  sol.residual = riccati_residual(co, mu_of(lambda), sol.P1);
  (void)model;
}

// Scalar A(lambda), B(lambda) without forming matrices.
void scalar_AB(const ScalarModel& m, double lambda, double& A, double& B) {
  const double mu = mu_of(lambda);
  A = m.Theta1 + mu * m.sb * (m.A1 - m.r1) / m.c;
  B = m.ssq + mu * m.sb * m.sb / m.c;
}

// E(lambda) for l = n = 1 given the Riccati root.
double scalar_E(const ScalarModel& m, double lambda, double P1) {
  const double mu = mu_of(lambda);
  return mu * (m.A1 - m.r1 + m.sb * P1) * (m.a2 - m.r2 - lambda * m.bbeta) / m.c +
         lambda * (m.r1 - m.alpha1 - P1 * m.sbeta) + P1 * m.theta2;
}

// P1(lambda) on the tilde_beta = 1 branch, where D(lambda) = Theta1 for all
// lambda and the root has an explicit rational form.
double beta_eq1_P1(const ScalarModel& m, double lambda) {
  if (std::abs(m.sb) < kTolRiccati) return 0.0;
  const double denom = (1.0 - lambda) / lambda * m.ssq + m.sb * m.sb / m.c;
  return -m.sb / m.c * (m.A1 - m.r1) / denom;
}

}  // namespace

RiccatiCoefficients riccati_coefficients(const AffineModel& model, double lambda) {
  if (lambda >= 1.0)
    throw DomainError("riccati coefficients require lambda < 1");
  const double mu = mu_of(lambda);
  const Matrix excess =
      model.A1 - Vector::Ones(model.n()) * model.r1.transpose();  // n x l
  Eigen::LLT<Matrix> llt(model.c());
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("b b' not positive definite in riccati coefficients");
  const Matrix sb = model.sigma * model.b.transpose();  // l x n
  RiccatiCoefficients co;
  co.A = model.Theta1 + mu * sb * llt.solve(excess);
  co.B = model.sigma * model.sigma.transpose() +
         mu * sb * llt.solve(sb.transpose());
  co.C = excess.transpose() * llt.solve(excess);
  return co;
}

double tilde_beta(const ScalarModel& model) {
  return 1.0 + (model.A1 - model.r1) / (model.Theta1 * model.Theta1 * model.c) *
                   (model.ssq * (model.A1 - model.r1) -
                    2.0 * model.Theta1 * model.sb);
}

RiccatiSolution scalar_closed_form(const ScalarModel& model, double lambda) {
  if (lambda >= 1.0)
    throw DomainError("scalar closed form requires lambda < 1");
  const double tb = tilde_beta(model);
  const double ratio = (1.0 - lambda * tb) / (1.0 - lambda);
  if (ratio < -kTolRiccati)
    throw NoSolutionError("no Riccati root: 1 - lambda tilde_beta < 0");
  const double root = std::sqrt(std::max(ratio, 0.0));
  double A, B;
  scalar_AB(model, lambda, A, B);
  RiccatiSolution sol;
  sol.lambda = lambda;
  sol.P1 = Matrix::Constant(1, 1, (-A - std::abs(model.Theta1) * root) / B);
  const AffineModel aff = model.to_affine();
  finish_solution(aff, lambda, riccati_coefficients(aff, lambda), sol);
  // Overwrite with the exact closed form to avoid rounding in A + B P1.
  sol.D = Matrix::Constant(1, 1, model.Theta1 * root);
  return sol;
}

RiccatiSolution solve_riccati(const AffineModel& model, double lambda) {
  if (lambda >= 1.0)
    throw DomainError("riccati solve requires lambda < 1");
  const int l = model.l();
  const RiccatiCoefficients co = riccati_coefficients(model, lambda);
  RiccatiSolution sol;
  sol.lambda = lambda;

  if (lambda == 0.0) {
    sol.P1 = Matrix::Zero(l, l);
    finish_solution(model, lambda, co, sol);
    return sol;
  }

  if (l == 1) {
    const double A = co.A(0, 0), B = co.B(0, 0);
    const double disc = A * A - B * mu_of(lambda) * co.C(0, 0);
    if (disc < -kTolRiccati)
      throw NoSolutionError("no Riccati root: negative discriminant");
    const double root = std::sqrt(std::max(disc, 0.0));
    // D = A + B P1 = -sqrt(disc), the branch with a stationary tilt.
    sol.P1 = Matrix::Constant(1, 1, (-A - root) / B);
    finish_solution(model, lambda, co, sol);
    return sol;
  }

  // Hamiltonian of P B P + A'P + P A + mu C = 0; the stable invariant
  // subspace [U; V] gives P = V U^{-1}.
  const double mu = mu_of(lambda);
  Matrix H(2 * l, 2 * l);
  H.topLeftCorner(l, l) = co.A;
  H.topRightCorner(l, l) = co.B;
  H.bottomLeftCorner(l, l) = -mu * co.C;
  H.bottomRightCorner(l, l) = -co.A.transpose();
  Eigen::EigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success)
    throw NumericalError("Hamiltonian eigendecomposition failed");

  std::vector<int> order(2 * l);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return es.eigenvalues()(i).real() < es.eigenvalues()(j).real();
  });
  Eigen::MatrixXcd basis(2 * l, l);
  for (int j = 0; j < l; ++j) basis.col(j) = es.eigenvectors().col(order[j]);
  const Eigen::MatrixXcd U = basis.topRows(l);
  const Eigen::MatrixXcd V = basis.bottomRows(l);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(U);
  if (!lu.isInvertible())
    throw NoSolutionError("stable invariant subspace is not a graph over the state");
  Matrix P = (V * lu.inverse()).real();
  P = 0.5 * (P + P.transpose());

  // Newton polish via the Sylvester linearization.
  for (int it = 0; it < 50; ++it) {
    const Matrix D = co.A + co.B * P;
    const Matrix R = P * co.B * P + co.A.transpose() * P + P * co.A + mu * co.C;
    if (R.norm() < 0.1 * kTolRiccati) break;
    const Matrix delta = solve_sylvester_small(D, R);
    P += delta;
    P = 0.5 * (P + P.transpose());
    if (delta.norm() < 1e-16 * (1.0 + P.norm())) break;
  }
  sol.P1 = P;
  finish_solution(model, lambda, co, sol);
  if (sol.residual > 1e3 * kTolRiccati)
    throw NoSolutionError("Riccati iteration did not reach tolerance");
  return sol;
}

Matrix solve_sylvester_small(const Matrix& S, const Matrix& Q) {
  const int l = static_cast<int>(S.rows());
  Matrix K = Matrix::Zero(l * l, l * l);
  const Matrix I = Matrix::Identity(l, l);
  // vec(X S + S' X) = (S' kron I + I kron S') vec(X), column-major vec.
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) {
      K.block(i * l, j * l, l, l) += S(j, i) * I;
      if (i == j) K.block(i * l, j * l, l, l) += S.transpose();
    }
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible())
    throw SingularMatrixError("Sylvester operator singular (eigenvalue collision)");
  Vector q(l * l);
  for (int j = 0; j < l; ++j) q.segment(j * l, l) = -Q.col(j);
  const Vector x = lu.solve(q);
  Matrix X(l, l);
  for (int j = 0; j < l; ++j) X.col(j) = x.segment(j * l, l);
  return X;
}

ScalarCaseAnalysis classify_scalar_case(const ScalarModel& model, double q) {
  ScalarCaseAnalysis out;
  out.tilde_beta = tilde_beta(model);
  const double tb = out.tilde_beta;
  out.lambda_bar = tb > 1.0 ? 1.0 / tb : 1.0;
  const AffineModel aff = model.to_affine();

  if (tb > 1.0 + kTolRiccati) {
    // Boundary root: discriminant vanishes, P1 = -A/B, D = 0.
    double A, B;
    scalar_AB(model, out.lambda_bar, A, B);
    const double P1bar = -A / B;
    const double Ebar = scalar_E(model, out.lambda_bar, P1bar);
    if (std::abs(Ebar) > 1e-9) {
      out.scalar_case = ScalarCase::BetaGt1_Eneq0;
      out.F_at_bar = kInf;
      out.left_derivative_at_bar = kInf;
    } else {
      out.scalar_case = ScalarCase::BetaGt1_Eeq0;
      out.F_at_bar = F_left_limit_at_bar(aff);
      out.left_derivative_at_bar = kInf;
    }
    return out;
  }

  if (tb < 1.0 - kTolRiccati) {
    out.scalar_case = ScalarCase::BetaLt1;
    out.F_at_bar = F_left_limit_at_bar(aff);
    out.left_derivative_at_bar = kInf;  // square-root cusp at lambda = 1
    return out;
  }

  // tilde_beta = 1: D(lambda) = Theta1 throughout and P1, p2 extend
  // continuously to lambda = 1; degeneracy hinges on the second
  // compatibility condition a2 - r2 - b.beta + sb p2(1) = 0.
  const double P1_1 = std::abs(model.sb) < kTolRiccati
                          ? 0.0
                          : -(model.A1 - model.r1) / model.sb;
  const double p2_1 = -scalar_E(model, 1.0 - 1e-12, P1_1) / model.Theta1;
  const double cond2 = model.a2 - model.r2 - model.bbeta + model.sb * p2_1;
  if (std::abs(cond2) > 1e-8) {
    out.scalar_case = ScalarCase::BetaEq1_Regular;
    out.F_at_bar = kInf;
    out.left_derivative_at_bar = kInf;
    return out;
  }

  out.scalar_case = ScalarCase::BetaEq1_Degenerate;
  out.F_at_bar = 0.5 * model.ssq * p2_1 * p2_1 +
                 (-model.sbeta + model.theta2) * p2_1 + model.r2 - model.alpha2 +
                 model.beta_sq + 0.5 * model.ssq * P1_1;
  // One-sided derivative of p2 at 1 from the explicit branch formulas.
  const double h = 1e-5;
  auto p2_at = [&](double lam) {
    return -scalar_E(model, lam, beta_eq1_P1(model, lam)) / model.Theta1;
  };
  const double dp2 = (3.0 * p2_1 - 4.0 * p2_at(1.0 - h) + p2_at(1.0 - 2.0 * h)) /
                     (2.0 * h);
  const double dP1 = std::abs(model.sb) < kTolRiccati
                         ? 0.0
                         : -model.ssq * (model.A1 - model.r1) * model.c /
                               (model.sb * model.sb * model.sb);
  out.left_derivative_at_bar =
      model.ssq * dp2 * p2_1 +
      (model.sb * dp2 - model.bbeta) * (model.sb * dp2 - model.bbeta) /
          (2.0 * model.c) -
      model.sbeta * p2_1 + (-model.sbeta + model.theta2) * dp2 + model.r2 -
      model.alpha2 + 1.5 * model.beta_sq + 0.5 * model.ssq * dP1;
  out.lambda_hat_is_one = out.left_derivative_at_bar <= q;
  return out;
}

}  // namespace ldp
