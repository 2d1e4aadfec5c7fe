#include "ldp/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "ldp/errors.hpp"
#include "ldp/rng.hpp"

namespace ldp {
namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LDP_PORTFOLIO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Affine tilt data flattened for the inner loop: u_hat(x) = G x + g0.
struct TiltRuntime {
  double lambda_hat;
  Matrix G;
  Vector g0;
  Matrix P1;
  Vector p2;
};

TiltRuntime flatten_tilt(const MeasureTilt& tilt, const AffineModel& model) {
  TiltRuntime rt;
  rt.lambda_hat = tilt.lambda_hat;
  if (tilt.u_hat.degenerate) {
    rt.G = Matrix::Zero(model.n(), model.l());
    rt.g0 = tilt.u_hat.eval(Vector::Zero(model.l()), model);
  } else {
    rt.G = tilt.u_hat.G;
    rt.g0 = tilt.u_hat.g0;
  }
  rt.P1 = tilt.P1;
  rt.p2 = tilt.p2;
  return rt;
}

template <class PerStep>
void run_paths(const AffineModel& model, const SimConfig& config,
               PerStep&& per_path) {
  const int n_threads = std::min(resolve_threads(config.n_threads),
                                 config.n_paths);
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  const int chunk = (config.n_paths + n_threads - 1) / n_threads;
  for (int w = 0; w < n_threads; ++w) {
    const int first = w * chunk;
    const int last = std::min(config.n_paths, first + chunk);
    if (first >= last) break;
    workers.emplace_back([&, first, last] {
      for (int p = first; p < last; ++p) per_path(p);
    });
  }
  for (auto& t : workers) t.join();
}

double sample_sd(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

FeedbackPolicy make_policy(const AffinePortfolio& portfolio,
                           const AffineModel& model) {
  if (portfolio.degenerate) {
    const Vector u = portfolio.eval(Vector::Zero(model.l()), model);
    return [u](const Vector&) { return u; };
  }
  const Matrix G = portfolio.G;
  const Vector g0 = portfolio.g0;
  return [G, g0](const Vector& x) -> Vector { return G * x + g0; };
}

FeedbackPolicy make_grid_policy(const std::vector<double>& x,
                                const std::vector<double>& u) {
  if (x.size() != u.size() || x.size() < 2)
    throw ValidationError("grid policy needs matching x, u with >= 2 nodes");
  return [x, u](const Vector& state) -> Vector {
    const double s = state(0);
    Vector out(1);
    const size_t n = x.size();
    if (s <= x.front()) {
      const double slope = (u[1] - u[0]) / (x[1] - x[0]);
      out(0) = u[0] + slope * (s - x[0]);
    } else if (s >= x.back()) {
      const double slope = (u[n - 1] - u[n - 2]) / (x[n - 1] - x[n - 2]);
      out(0) = u[n - 1] + slope * (s - x[n - 1]);
    } else {
      const auto it = std::upper_bound(x.begin(), x.end(), s);
      const size_t i = static_cast<size_t>(it - x.begin());
      const double w = (s - x[i - 1]) / (x[i] - x[i - 1]);
      out(0) = (1.0 - w) * u[i - 1] + w * u[i];
    }
    return out;
  };
}

MeasureTilt make_tilt_at_lambda(const AffineModel& model, double lambda) {
  MeasureTilt tilt;
  tilt.lambda_hat = lambda;
  tilt.u_hat = portfolio_at_lambda(model, lambda);
  const RiccatiSolution ric = solve_riccati(model, lambda);
  tilt.P1 = ric.P1;
  tilt.p2 = solve_p2(model, ric);
  return tilt;
}

MeasureTilt make_optimal_tilt(const AffineModel& model, double q) {
  const RateCurve stub = build_rate_curve(model, -1.0, 0.0, 2);
  const DecaySolution d = decay_rates(stub, q);
  if (!d.degenerate) return make_tilt_at_lambda(model, d.lambda_hat);
  if (model.n() != 1 || model.l() != 1)
    throw NumericalError(
        "degenerate tilt limits implemented for scalar models only");
  const ScalarModel s = ScalarModel::from_affine(model);
  MeasureTilt tilt;
  tilt.lambda_hat = 1.0;
  tilt.u_hat = optimal_portfolio(model, q);
  const double P1 = std::abs(s.sb) < 1e-12 ? 0.0 : -(s.A1 - s.r1) / s.sb;
  const double p2 = std::abs(s.sb) < 1e-12
                        ? 0.0
                        : -(s.a2 - s.r2 - s.bbeta) / s.sb;
  tilt.P1 = Matrix::Constant(1, 1, P1);
  tilt.p2 = Vector::Constant(1, p2);
  return tilt;
}

void SimConfig::validate(const AffineModel& model) const {
  if (!(horizon > 0.0) || !(dt > 0.0))
    throw ValidationError("simulation horizon and step must be positive");
  const double theta_scale = model.Theta1.norm();
  if (dt > std::min(0.01, 0.1 / std::max(theta_scale, 1e-12)) + 1e-15)
    throw ValidationError("time step too coarse for the factor mean reversion");
  if (n_paths < 100) throw ValidationError("need at least 100 paths");
  if (x0 && x0->size() != model.l())
    throw ValidationError("x0 dimension does not match the factor dimension");
  if (!(blowup_guard > 0.0))
    throw ValidationError("blowup guard must be positive");
}

std::vector<PathResult> simulate_paths(const AffineModel& model,
                                       const FeedbackPolicy& policy,
                                       const SimConfig& config) {
  config.validate(model);
  const int l = model.l(), k = model.k();
  const long steps = std::lround(config.horizon / config.dt);
  const double dt = config.dt;
  const double sqrt_dt = std::sqrt(dt);
  const Vector x0 = config.x0 ? *config.x0 : Vector::Zero(l);
  const Vector ones_n = Vector::Ones(model.n());
  const Matrix c = model.c();
  const double half_beta_sq = 0.5 * model.beta.squaredNorm();
  const bool tilted = config.tilt.has_value();
  TiltRuntime rt;
  if (tilted) rt = flatten_tilt(*config.tilt, model);

  std::vector<PathResult> results(config.n_paths);
  std::atomic<bool> blew_up{false};

  run_paths(model, config, [&](int p) {
    PhiloxStream rng(config.seed, static_cast<uint64_t>(p));
    Vector X = x0;
    Vector dW(k), N(k), h(k), u, a_x(model.n()), uhat;
    double tL = 0.0, lw = 0.0, xsum = 0.0;
    for (long s = 0; s < steps; ++s) {
      if (blew_up.load(std::memory_order_relaxed)) return;
      xsum += X(0);
      u = policy(X);
      a_x.noalias() = model.A1 * X;
      a_x += model.a2;
      const double r_x = model.r1.dot(X) + model.r2;
      const double alpha_x = model.alpha1.dot(X) + model.alpha2;
      const double M = u.dot(a_x) - r_x * u.sum() - 0.5 * u.dot(c * u) + r_x -
                       alpha_x + half_beta_sq;
      N.noalias() = model.b.transpose() * u;
      N -= model.beta;
      for (int j = 0; j < k; ++j) dW(j) = sqrt_dt * rng.normal();
      if (tilted) {
        uhat.noalias() = rt.G * X;
        uhat += rt.g0;
        h.noalias() = model.b.transpose() * uhat;
        h -= model.beta;
        h *= rt.lambda_hat;
        h.noalias() += model.sigma.transpose() * (rt.P1 * X + rt.p2);
        tL += M * dt + N.dot(dW) + N.dot(h) * dt;
        lw += -h.dot(dW) - 0.5 * h.squaredNorm() * dt;
        X += (model.Theta1 * X + model.theta2 + model.sigma * h) * dt +
             model.sigma * dW;
      } else {
        tL += M * dt + N.dot(dW);
        X += (model.Theta1 * X + model.theta2) * dt + model.sigma * dW;
      }
      if (X.norm() > config.blowup_guard) {
        blew_up.store(true, std::memory_order_relaxed);
        return;
      }
    }
    results[p].L = tL / config.horizon;
    results[p].log_weight = lw;
    results[p].x_mean = xsum / static_cast<double>(steps);
  });
  if (blew_up.load())
    throw NumericalBlowupError("factor process exceeded the blowup guard");
  return results;
}

GrowthEstimate estimate_growth_rate(const AffineModel& model,
                                    const FeedbackPolicy& policy, double lambda,
                                    const SimConfig& config) {
  const std::vector<PathResult> paths = simulate_paths(model, policy, config);
  const double t = config.horizon;
  const size_t n = paths.size();
  double y_max = -kInf;
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) {
    y[i] = lambda * t * paths[i].L + paths[i].log_weight;
    y_max = std::max(y_max, y[i]);
  }
  std::vector<double> w(n);
  double sum_w = 0.0, sum_w2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    w[i] = std::exp(y[i] - y_max);
    sum_w += w[i];
    sum_w2 += w[i] * w[i];
  }
  const double mean_w = sum_w / static_cast<double>(n);

  GrowthEstimate est;
  est.lambda = lambda;
  est.rate = (y_max + std::log(mean_w)) / t;
  est.std_error = sample_sd(w, mean_w) / (mean_w * std::sqrt(double(n))) / t;
  est.n_effective = sum_w * sum_w / sum_w2;

  std::vector<double> sorted = w;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const size_t top = std::max<size_t>(1, n / 100);
  double top_mass = 0.0;
  for (size_t i = 0; i < top; ++i) top_mass += sorted[i];
  est.degenerate_weights = top_mass > 0.5 * sum_w;
  return est;
}

TailEstimate estimate_tail_rate(const AffineModel& model,
                                const FeedbackPolicy& policy, double q,
                                TailSide side, const SimConfig& config) {
  const std::vector<PathResult> paths = simulate_paths(model, policy, config);
  const double t = config.horizon;
  const size_t n = paths.size();

  TailEstimate est;
  est.q = q;
  est.side = side;
  est.tilted = config.tilt.has_value();

  double lw_max = -kInf;
  long hits = 0;
  double sum_L = 0.0;
  for (const PathResult& p : paths) {
    sum_L += p.L;
    const bool hit = side == TailSide::AtLeast ? p.L >= q : p.L <= q;
    if (hit) {
      ++hits;
      lw_max = std::max(lw_max, p.log_weight);
    }
  }
  est.hits = hits;
  est.mean_L = sum_L / static_cast<double>(n);
  double var_L = 0.0;
  for (const PathResult& p : paths)
    var_L += (p.L - est.mean_L) * (p.L - est.mean_L);
  est.se_mean_L = std::sqrt(var_L / (double(n) - 1.0) / double(n));

  if (hits == 0) {
    est.zero_hits = true;
    est.rate = -kInf;
    est.std_error = kInf;
    return est;
  }
  std::vector<double> w(n, 0.0);
  double sum_w = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const bool hit = side == TailSide::AtLeast ? paths[i].L >= q
                                               : paths[i].L <= q;
    if (hit) {
      w[i] = std::exp(paths[i].log_weight - lw_max);
      sum_w += w[i];
    }
  }
  const double mean_w = sum_w / static_cast<double>(n);
  est.rate = (lw_max + std::log(mean_w)) / t;
  est.std_error = sample_sd(w, mean_w) / (mean_w * std::sqrt(double(n))) / t;
  return est;
}

ErgodicAverage ergodic_average(const AffineModel& model, double lambda,
                               const std::function<double(const Vector&)>& g,
                               const SimConfig& config) {
  config.validate(model);
  const MeasureTilt tilt = make_tilt_at_lambda(model, lambda);
  const TiltRuntime rt = flatten_tilt(tilt, model);
  const int l = model.l(), k = model.k();
  const long steps = std::lround(config.horizon / config.dt);
  const long burn = steps / 10;
  const double dt = config.dt;
  const double sqrt_dt = std::sqrt(dt);
  const Vector x0 = config.x0 ? *config.x0 : Vector::Zero(l);

  std::vector<double> values(config.n_paths, 0.0);
  run_paths(model, config, [&](int p) {
    PhiloxStream rng(config.seed, static_cast<uint64_t>(p));
    Vector X = x0;
    Vector dW(k), h(k), uhat;
    double acc = 0.0;
    for (long s = 0; s < steps; ++s) {
      if (s >= burn) acc += g(X);
      for (int j = 0; j < k; ++j) dW(j) = sqrt_dt * rng.normal();
      uhat.noalias() = rt.G * X;
      uhat += rt.g0;
      h.noalias() = model.b.transpose() * uhat;
      h -= model.beta;
      h *= rt.lambda_hat;
      h.noalias() += model.sigma.transpose() * (rt.P1 * X + rt.p2);
      X += (model.Theta1 * X + model.theta2 + model.sigma * h) * dt +
           model.sigma * dW;
    }
    values[p] = acc / static_cast<double>(steps - burn);
  });

  ErgodicAverage out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  out.value = mean;
  out.std_error = sample_sd(values, mean) /
                  std::sqrt(static_cast<double>(values.size()));
  return out;
}

}  // namespace ldp
