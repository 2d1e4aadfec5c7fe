#pragma once

#include <vector>

#include "ldp/model.hpp"

namespace ldp {

inline constexpr double kTolPde = 1e-6;

struct Grid1D {
  double x_min = -8.0;
  double x_max = 8.0;
  int n_points = 257;

  double h() const { return (x_max - x_min) / (n_points - 1); }
  double x(int i) const { return x_min + i * h(); }
  void validate() const;
};

// Coefficients of the pointwise quadratic in p:
//   Hbreve(x; lambda, p) = T/2 p^2 + S p + R.
struct QuadraticCoefficients {
  double T = 0.0, S = 0.0, R = 0.0;
};

QuadraticCoefficients hamiltonian_coefficients(const GeneralModel1D& model,
                                               double lambda, double x);

double eval_Hbreve(const GeneralModel1D& model, double lambda, double x, double p);

struct ErgodicSolution1D {
  Grid1D grid;
  double lambda = 0.0;
  double Lambda = 0.0;          // the constant growth rate
  std::vector<double> g;        // gradient of the value function on the grid
  std::vector<double> u;        // optimal feedback on the grid
  std::vector<double> m_hat;    // invariant density, trapezoid-normalized
  double residual = 0.0;        // max interior |H - Lambda| / (1 + |Lambda|)
};

// Two-sided shooting on the gradient ODE
//   (ssq/2) g' + T/2 g^2 + S g + R = Lambda
// along the branch-stable roots, with the eigenvalue located by bisection on
// the matching defect at x = 0.
ErgodicSolution1D solve_ergodic_bellman(const GeneralModel1D& model,
                                        double lambda, const Grid1D& grid);

// u(x) = (1/(1-lambda)) c(x)^{-1} (a - r - lambda b.beta + b sigma' g).
std::vector<double> feedback_from_gradient(const GeneralModel1D& model,
                                           double lambda,
                                           const Grid1D& grid,
                                           const std::vector<double>& g);

}  // namespace ldp
