#pragma once

#include <limits>

#include "ldp/model.hpp"

namespace ldp {

inline constexpr double kTolRiccati = 1e-10;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Definiteness { NegativeSemiDef, PositiveSemiDef, Indefinite };

struct RiccatiCoefficients {
  Matrix A;  // Theta1 + mu sigma b' c^{-1} (A1 - 1 r1'),  mu = lambda/(1-lambda)
  Matrix B;  // sigma sigma' + mu sigma b' c^{-1} b sigma'
  Matrix C;  // (A1 - 1 r1')' c^{-1} (A1 - 1 r1')
};

struct RiccatiSolution {
  double lambda = 0.0;
  Matrix P1;  // symmetric l x l root of  P B P + A'P + P A + mu C = 0
  Matrix D;   // A + B P1
  bool stable = false;      // all eig(D) real parts < -tol
  bool semistable = false;  // max real part within tol of zero
  Definiteness definiteness = Definiteness::Indefinite;
  double residual = 0.0;    // Frobenius norm of the Riccati residual
};

RiccatiCoefficients riccati_coefficients(const AffineModel& model, double lambda);

// Root with the sign convention that matches the growth-rate problem:
// negative semidefinite for lambda < 0, positive semidefinite on (0, 1).
// l = 1 goes through the quadratic formula; l > 1 through the invariant
// subspace of the 2l x 2l Hamiltonian matrix plus a Newton polish.
RiccatiSolution solve_riccati(const AffineModel& model, double lambda);

double tilde_beta(const ScalarModel& model);

// Closed-form scalar root: P1 = (1/B)(-A - |Theta1| sqrt((1-lambda b~)/(1-lambda))),
// D = Theta1 sqrt((1-lambda b~)/(1-lambda)).
RiccatiSolution scalar_closed_form(const ScalarModel& model, double lambda);

enum class ScalarCase {
  BetaGt1_Eneq0,
  BetaGt1_Eeq0,
  BetaLt1,
  BetaEq1_Regular,
  BetaEq1_Degenerate,
};

struct ScalarCaseAnalysis {
  double tilde_beta = 0.0;
  double lambda_bar = 0.0;
  ScalarCase scalar_case = ScalarCase::BetaGt1_Eneq0;
  double F_at_bar = 0.0;                 // +inf when the curve blows up
  double left_derivative_at_bar = 0.0;   // +inf when the slope blows up
  bool lambda_hat_is_one = false;        // degenerate case and F'(1-) <= q
};

ScalarCaseAnalysis classify_scalar_case(const ScalarModel& model, double q);

// Solves X S + S' X = -Q by Kronecker vectorization (small l only).
Matrix solve_sylvester_small(const Matrix& S, const Matrix& Q);

}  // namespace ldp
