#include "ldp/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ldp/errors.hpp"
#include "ldp/riccati.hpp"

namespace ldp {
namespace {

double min_symmetric_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

double max_real_eigenvalue(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m);
  return es.eigenvalues().real().maxCoeff();
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("model shape error: " + what);
}

}  // namespace

void AffineModel::validate(std::vector<std::string>* warnings) const {
  const int nn = n(), ll = l(), kk = k();
  require_shape(nn >= 1 && ll >= 1 && kk >= 1, "empty dimensions");
  require_shape(A1.rows() == nn && A1.cols() == ll, "A1 must be n x l");
  require_shape(a2.size() == nn, "a2 must have length n");
  require_shape(r1.size() == ll, "r1 must have length l");
  require_shape(alpha1.size() == ll, "alpha1 must have length l");
  require_shape(Theta1.rows() == ll && Theta1.cols() == ll, "Theta1 must be l x l");
  require_shape(theta2.size() == ll, "theta2 must have length l");
  require_shape(beta.size() == kk, "beta must have length k");
  require_shape(sigma.rows() == ll && sigma.cols() == kk, "sigma must be l x k");

  if (min_symmetric_eigenvalue(c()) <= kTolPd)
    throw ValidationError("b b' is not positive definite");
  if (min_symmetric_eigenvalue(sigma * sigma.transpose()) <= kTolPd)
    throw ValidationError("sigma sigma' is not positive definite");
  if (max_real_eigenvalue(Theta1) >= -kTolPd)
    throw ValidationError("Theta1 is not a stable (Hurwitz) matrix");
  if (beta.norm() <= kTolPd)
    throw ValidationError("beta must be non-zero (benchmark must be volatile)");

  if (warnings) {
    const Matrix sym = 0.5 * (Theta1 + Theta1.transpose());
    if (Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().maxCoeff() >= -kTolPd)
      warnings->push_back(
          "Theta1 is Hurwitz but not symmetric negative definite; accepted "
          "since only stability is used downstream");
    if (kk < nn + ll)
      warnings->push_back("k < n + l: condition (N) cannot hold");
  }
}

ScalarModel ScalarModel::from_affine(const AffineModel& model) {
  if (model.n() != 1 || model.l() != 1)
    throw ValidationError("scalar specialization requires n = l = 1");
  ScalarModel s;
  s.A1 = model.A1(0, 0);
  s.a2 = model.a2(0);
  s.r1 = model.r1(0);
  s.r2 = model.r2;
  s.alpha1 = model.alpha1(0);
  s.alpha2 = model.alpha2;
  s.Theta1 = model.Theta1(0, 0);
  s.theta2 = model.theta2(0);
  s.b = model.b.row(0).transpose();
  s.sigma = model.sigma.row(0).transpose();
  s.beta = model.beta;
  s.c = s.b.squaredNorm();
  s.ssq = s.sigma.squaredNorm();
  s.sb = s.sigma.dot(s.b);
  s.bbeta = s.b.dot(s.beta);
  s.sbeta = s.sigma.dot(s.beta);
  s.beta_sq = s.beta.squaredNorm();
  s.validate();
  return s;
}

AffineModel ScalarModel::to_affine() const {
  AffineModel m;
  const int kk = static_cast<int>(b.size());
  m.A1 = Matrix::Constant(1, 1, A1);
  m.a2 = Vector::Constant(1, a2);
  m.r1 = Vector::Constant(1, r1);
  m.r2 = r2;
  m.alpha1 = Vector::Constant(1, alpha1);
  m.alpha2 = alpha2;
  m.Theta1 = Matrix::Constant(1, 1, Theta1);
  m.theta2 = Vector::Constant(1, theta2);
  m.b = b.transpose();
  m.beta = beta;
  m.sigma = Matrix(1, kk);
  m.sigma.row(0) = sigma.transpose();
  return m;
}

void ScalarModel::validate() const {
  if (!(Theta1 < 0)) throw ValidationError("scalar model requires Theta1 < 0");
  if (!(c > 0)) throw ValidationError("scalar model requires b b' > 0");
  if (!(ssq > 0)) throw ValidationError("scalar model requires sigma sigma' > 0");
}

GeneralModel1D GeneralModel1D::from_affine(const AffineModel& model,
                                           double domain_min, double domain_max) {
  const ScalarModel s = ScalarModel::from_affine(model);
  GeneralModel1D g;
  g.a = [s](double x) { return s.A1 * x + s.a2; };
  g.r = [s](double x) { return s.r1 * x + s.r2; };
  g.alpha = [s](double x) { return s.alpha1 * x + s.alpha2; };
  g.theta = [s](double x) { return s.Theta1 * x + s.theta2; };
  g.b = [s](double) { return s.b; };
  g.sigma = [s](double) { return s.sigma; };
  g.beta = [s](double) { return s.beta; };
  g.k = static_cast<int>(s.b.size());
  g.domain_min = domain_min;
  g.domain_max = domain_max;
  g.growth_K = std::abs(s.A1) + std::abs(s.r1) + std::abs(s.alpha1) +
               std::abs(s.Theta1) + std::abs(s.a2) + std::abs(s.r2) +
               std::abs(s.alpha2) + std::abs(s.theta2) + 1.0;
  return g;
}

void GeneralModel1D::validate(int grid_points) const {
  if (!(domain_min < 0.0 && domain_max > 0.0))
    throw ValidationError("general1d domain must contain 0");
  if (!a || !r || !alpha || !theta || !b || !sigma || !beta)
    throw ValidationError("general1d model has unset coefficient functions");
  const double h = (domain_max - domain_min) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double x = domain_min + i * h;
    if (b(x).squaredNorm() <= kTolPd)
      throw ValidationError("b(x) b(x)' not bounded away from zero on the domain");
    if (sigma(x).squaredNorm() <= kTolPd)
      throw ValidationError("sigma(x) sigma(x)' not bounded away from zero on the domain");
    if (beta(x).squaredNorm() <= kTolPd)
      throw ValidationError("beta(x) must be non-zero on the domain");
  }
  // Mean reversion at the declared endpoints.
  if (!(theta(domain_min) * domain_min < 0.0 && theta(domain_max) * domain_max < 0.0))
    throw ValidationError("theta(x) x must be negative at the domain endpoints");
}

Matrix projection_q1(const Matrix& b) {
  const int k = static_cast<int>(b.cols());
  const Matrix c = b * b.transpose();
  Eigen::FullPivLU<Matrix> lu(c);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw SingularMatrixError("b b' is numerically singular in projection_q1");
  return Matrix::Identity(k, k) - b.transpose() * lu.solve(b);
}

Matrix projection_q2(const Matrix& b, const Matrix& sigma) {
  const int k = static_cast<int>(b.cols());
  const Matrix q1 = projection_q1(b);
  const Matrix sq1s = sigma * q1 * sigma.transpose();
  Eigen::FullPivLU<Matrix> lu(sq1s);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw SingularMatrixError(
        "sigma Q1 sigma' is numerically singular (condition (N) part 1 fails)");
  const Matrix inner = Matrix::Identity(k, k) - sigma.transpose() * lu.solve(sigma);
  return q1 * inner * q1;
}

ConditionNReport check_condition_n(const AffineModel& model) {
  ConditionNReport rep;
  rep.k_margin = model.k() - model.n() - model.l();
  const Matrix q1 = projection_q1(model.b);
  rep.min_eig_sQ1s =
      min_symmetric_eigenvalue(model.sigma * q1 * model.sigma.transpose());
  rep.part1_ok = rep.min_eig_sQ1s > kTolPd;
  if (rep.part1_ok) {
    const Matrix q2 = projection_q2(model.b, model.sigma);
    rep.min_beta_Q2_beta = model.beta.dot(q2 * model.beta);
  } else {
    rep.min_beta_Q2_beta = 0.0;
  }
  rep.part2_ok = rep.min_beta_Q2_beta > kTolPd;
  return rep;
}

ConditionNReport check_condition_n(const GeneralModel1D& model,
                                   const std::vector<double>& x_grid) {
  if (x_grid.empty()) throw ValidationError("empty x grid for condition (N) check");
  ConditionNReport rep;
  rep.min_eig_sQ1s = kInf;
  rep.min_beta_Q2_beta = kInf;
  for (double x : x_grid) {
    const Matrix b = model.b(x).transpose();  // 1 x k
    Matrix sigma(1, model.k);
    sigma.row(0) = model.sigma(x).transpose();
    const Vector beta = model.beta(x);
    const Matrix q1 = projection_q1(b);
    const double e1 = min_symmetric_eigenvalue(sigma * q1 * sigma.transpose());
    rep.min_eig_sQ1s = std::min(rep.min_eig_sQ1s, e1);
    if (e1 > kTolPd) {
      const Matrix q2 = projection_q2(b, sigma);
      rep.min_beta_Q2_beta =
          std::min(rep.min_beta_Q2_beta, beta.dot(q2 * beta));
    } else {
      rep.min_beta_Q2_beta = 0.0;
    }
  }
  rep.k_margin = model.k - 2;
  rep.part1_ok = rep.min_eig_sQ1s > kTolPd;
  rep.part2_ok = rep.min_beta_Q2_beta > kTolPd;
  return rep;
}

bool check_growth_condition(const AffineModel& model,
                            const RiccatiSolution& riccati) {
  const Matrix c = model.c();
  const Matrix excess = model.A1 - Vector::Ones(model.n()) * model.r1.transpose();
  const Matrix bsP = model.b * model.sigma.transpose() * riccati.P1;  // n x l
  Eigen::LLT<Matrix> llt(c);
  const Matrix gap = bsP.transpose() * llt.solve(bsP) -
                     excess.transpose() * llt.solve(excess);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gap + gap.transpose()));
  return es.eigenvalues().maxCoeff() < -kTolPd;
}

}  // namespace ldp
