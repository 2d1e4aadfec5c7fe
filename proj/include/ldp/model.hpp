#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace ldp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kTolPd = 1e-10;

// Gaussian market-and-factor parameterization: n assets, l factors,
// k driving Wiener dimensions.
//   a(x) = A1 x + a2        asset drifts
//   r(x) = r1' x + r2       short rate
//   alpha(x) = alpha1' x + alpha2   benchmark drift
//   theta(x) = Theta1 x + theta2    factor drift
//   b, beta, sigma          constant volatility loadings
struct AffineModel {
  Matrix A1;       // n x l
  Vector a2;       // n
  Vector r1;       // l
  double r2 = 0.0;
  Vector alpha1;   // l
  double alpha2 = 0.0;
  Matrix Theta1;   // l x l
  Vector theta2;   // l
  Matrix b;        // n x k
  Vector beta;     // k
  Matrix sigma;    // l x k

  int n() const { return static_cast<int>(b.rows()); }
  int l() const { return static_cast<int>(sigma.rows()); }
  int k() const { return static_cast<int>(b.cols()); }

  Matrix c() const { return b * b.transpose(); }

  // Throws ValidationError on a hard violation; soft findings (Theta1 not
  // symmetric negative definite, k < n + l) are appended to `warnings`.
  void validate(std::vector<std::string>* warnings = nullptr) const;
};

// l = n = 1 specialization with the scalar contractions cached.
struct ScalarModel {
  double A1 = 0.0, a2 = 0.0, r1 = 0.0, r2 = 0.0;
  double alpha1 = 0.0, alpha2 = 0.0;
  double Theta1 = 0.0, theta2 = 0.0;
  Vector b, sigma, beta;  // k-vectors

  double c = 0.0;        // b b'
  double ssq = 0.0;      // sigma sigma'
  double sb = 0.0;       // sigma b'
  double bbeta = 0.0;    // b . beta
  double sbeta = 0.0;    // sigma . beta
  double beta_sq = 0.0;  // |beta|^2

  static ScalarModel from_affine(const AffineModel& model);
  AffineModel to_affine() const;
  void validate() const;
};

// Nonlinear scalar factor model: coefficients supplied as callables on a
// declared domain, with a linear-growth constant for diagnostics.
struct GeneralModel1D {
  std::function<double(double)> a, r, alpha, theta;
  std::function<Vector(double)> b, sigma, beta;
  int k = 0;
  double domain_min = 0.0, domain_max = 0.0;
  double growth_K = 0.0;

  static GeneralModel1D from_affine(const AffineModel& model,
                                    double domain_min, double domain_max);
  void validate(int grid_points = 101) const;
};

struct ConditionNReport {
  double min_eig_sQ1s = 0.0;
  double min_beta_Q2_beta = 0.0;
  bool part1_ok = false;
  bool part2_ok = false;
  int k_margin = 0;  // k - n - l
};

// Orthogonal projection onto the null space of b: Q1 = I_k - b'(bb')^{-1} b.
Matrix projection_q1(const Matrix& b);

// Q2 = Q1 (I_k - sigma'(sigma Q1 sigma')^{-1} sigma) Q1.
Matrix projection_q2(const Matrix& b, const Matrix& sigma);

ConditionNReport check_condition_n(const AffineModel& model);
// Grid variant for nonlinear models; reports infima over the grid.
ConditionNReport check_condition_n(const GeneralModel1D& model,
                                   const std::vector<double>& x_grid);

struct RiccatiSolution;  // riccati.hpp

// Affine sufficient condition for the tail-localization bound: true iff
// (b sigma' P1)' c^{-1} (b sigma' P1) - (A1 - 1 r1')' c^{-1} (A1 - 1 r1')
// is negative definite.
bool check_growth_condition(const AffineModel& model,
                            const RiccatiSolution& riccati);

}  // namespace ldp
