#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ldp/rate.hpp"

namespace ldp {

// State feedback pi_t = u(X_t); must admit linear-growth extrapolation.
using FeedbackPolicy = std::function<Vector(const Vector&)>;

FeedbackPolicy make_policy(const AffinePortfolio& portfolio, const AffineModel& model);
// Grid policy for l = n = 1: linear interpolation, linear extrapolation.
FeedbackPolicy make_grid_policy(const std::vector<double>& x,
                                const std::vector<double>& u);

// Exponential change of measure concentrating L at q: the factor drift is
// shifted by sigma (lambda_hat N(u_hat(x), x) + sigma' grad_f(x)) with
// grad_f(x) = P1 x + p2, and the pathwise log dP/dPhat weight accumulated.
struct MeasureTilt {
  double lambda_hat = 0.0;
  AffinePortfolio u_hat;
  Matrix P1;
  Vector p2;
};

MeasureTilt make_optimal_tilt(const AffineModel& model, double q);
MeasureTilt make_tilt_at_lambda(const AffineModel& model, double lambda);

struct SimConfig {
  double horizon = 50.0;
  double dt = 0.005;
  int n_paths = 20000;
  uint64_t seed = 1;
  std::optional<MeasureTilt> tilt;
  std::optional<Vector> x0;  // default: origin
  double blowup_guard = 1e6;
  int n_threads = 0;  // 0: LDP_PORTFOLIO_THREADS or hardware concurrency

  void validate(const AffineModel& model) const;
};

struct PathResult {
  double L = 0.0;           // (1/t) ln(Z_t / Y_t)
  double log_weight = 0.0;  // ln dP/dPhat; 0 when untilted
  double x_mean = 0.0;      // time average of the first factor coordinate
};

std::vector<PathResult> simulate_paths(const AffineModel& model,
                                       const FeedbackPolicy& policy,
                                       const SimConfig& config);

struct GrowthEstimate {
  double lambda = 0.0;
  double rate = 0.0;       // (1/t) ln mean e^{lambda t L}
  double std_error = 0.0;  // delta method on the log, per unit time
  double n_effective = 0.0;
  bool degenerate_weights = false;  // top 1% of weights carry > 50% of mass
};

GrowthEstimate estimate_growth_rate(const AffineModel& model,
                                    const FeedbackPolicy& policy, double lambda,
                                    const SimConfig& config);

enum class TailSide { AtLeast, AtMost };

struct TailEstimate {
  double q = 0.0;
  TailSide side = TailSide::AtMost;
  double rate = 0.0;  // (1/t) ln P(L >=/<= q); -inf on zero hits untilted
  double std_error = 0.0;
  bool tilted = false;
  bool zero_hits = false;
  long hits = 0;
  double mean_L = 0.0;       // empirical mean of L on the sampled measure
  double se_mean_L = 0.0;
};

TailEstimate estimate_tail_rate(const AffineModel& model,
                                const FeedbackPolicy& policy, double q,
                                TailSide side, const SimConfig& config);

struct ErgodicAverage {
  double value = 0.0;
  double std_error = 0.0;  // batch-means standard error
};

// Long-run time average of g(X) under the lambda-tilted factor dynamics.
ErgodicAverage ergodic_average(const AffineModel& model, double lambda,
                               const std::function<double(const Vector&)>& g,
                               const SimConfig& config);

}  // namespace ldp
