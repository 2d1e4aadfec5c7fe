#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldp/bellman1d.hpp"
#include "ldp/errors.hpp"
#include "ldp/io.hpp"
#include "ldp/model.hpp"
#include "ldp/rate.hpp"
#include "ldp/simulate.hpp"

namespace {

using ldp::AffineModel;
using ldp::GeneralModel1D;

struct Options {
  std::string model_path;
  std::string out_dir = ".";
};

AffineModel require_affine(const ldp::ModelDocument& doc) {
  if (const auto* m = std::get_if<AffineModel>(&doc)) return *m;
  throw ldp::ValidationError("this command requires an affine model");
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& body) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw ldp::ValidationError("cannot write " + path);
  out << body;
  std::cout << path << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Optimal benchmark-beating portfolios for diffusion factor models"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("model", opt.model_path, "model JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "output directory");
  };

  auto* c_check = app.add_subcommand("check", "validate the model and report condition (N)");
  add_common(c_check);

  auto* c_curve = app.add_subcommand("rate-curve", "sample the growth rate curve F(lambda)");
  add_common(c_curve);
  double lmin = -2.0, lmax = 0.99;
  int curve_n = 101;
  c_curve->add_option("--lmin", lmin, "left end of the lambda grid");
  c_curve->add_option("--lmax", lmax, "right end of the lambda grid");
  c_curve->add_option("--n", curve_n, "number of grid points");

  auto* c_decay = app.add_subcommand("decay", "decay rates and lambda_hat for a target rate");
  add_common(c_decay);
  double q = 0.0;
  c_decay->add_option("--q", q, "target growth rate")->required();

  auto* c_port = app.add_subcommand("portfolio", "optimal feedback portfolio for a target rate");
  add_common(c_port);
  double q_port = 0.0;
  c_port->add_option("--q", q_port, "target growth rate")->required();

  auto* c_bell = app.add_subcommand("bellman1d", "solve the scalar ergodic Bellman equation");
  add_common(c_bell);
  double bell_lambda = -1.0, xmin = -8.0, xmax = 8.0;
  int bell_n = 257;
  c_bell->add_option("--lambda", bell_lambda, "risk sensitivity")->required();
  c_bell->add_option("--grid", bell_n, "number of grid points");
  c_bell->add_option("--xmin", xmin, "left end of the grid");
  c_bell->add_option("--xmax", xmax, "right end of the grid");

  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo growth or tail estimation");
  add_common(c_sim);
  std::string estimator = "growth", side = "at_most";
  double sim_lambda = -1.0, sim_q = 0.0, horizon = 50.0, dt = 0.005;
  int n_paths = 20000;
  uint64_t seed = 1;
  bool tilted = false;
  c_sim->add_option("--estimator", estimator, "growth or tail")
      ->check(CLI::IsMember({"growth", "tail"}));
  c_sim->add_option("--lambda", sim_lambda, "risk sensitivity (growth)");
  c_sim->add_option("--q", sim_q, "threshold rate (tail)");
  c_sim->add_option("--side", side, "tail side")
      ->check(CLI::IsMember({"at_least", "at_most"}));
  c_sim->add_option("--horizon", horizon, "time horizon");
  c_sim->add_option("--dt", dt, "time step");
  c_sim->add_option("--paths", n_paths, "number of paths");
  c_sim->add_option("--seed", seed, "random seed");
  c_sim->add_flag("--tilted", tilted, "importance-sample under the change of measure");

  CLI11_PARSE(app, argc, argv);

  const ldp::ModelDocument doc = ldp::load_model_json(opt.model_path);

  if (c_check->parsed()) {
    ldp::ConditionNReport rep;
    if (const auto* aff = std::get_if<AffineModel>(&doc)) {
      rep = ldp::check_condition_n(*aff);
    } else {
      const auto& g = std::get<GeneralModel1D>(doc);
      std::vector<double> xs;
      for (int i = 0; i <= 100; ++i)
        xs.push_back(g.domain_min + (g.domain_max - g.domain_min) * i / 100.0);
      rep = ldp::check_condition_n(g, xs);
    }
    write_file(opt.out_dir, "check.json", ldp::condition_report_to_json(rep));
    return 0;
  }

  if (c_curve->parsed()) {
    const AffineModel m = require_affine(doc);
    const ldp::RateCurve curve = ldp::build_rate_curve(m, lmin, lmax, curve_n);
    std::filesystem::create_directories(opt.out_dir);
    ldp::write_rate_curve_csv(curve, opt.out_dir + "/rate_curve.csv");
    std::cout << opt.out_dir + "/rate_curve.csv" << "\n";
    return 0;
  }

  if (c_decay->parsed()) {
    const AffineModel m = require_affine(doc);
    const ldp::RateCurve curve = ldp::build_rate_curve(m, -1.0, 0.0, 2);
    write_file(opt.out_dir, "decay.json",
               ldp::decay_to_json(ldp::decay_rates(curve, q)));
    return 0;
  }

  if (c_port->parsed()) {
    const AffineModel m = require_affine(doc);
    write_file(opt.out_dir, "portfolio.json",
               ldp::portfolio_to_json(ldp::optimal_portfolio(m, q_port)));
    return 0;
  }

  if (c_bell->parsed()) {
    GeneralModel1D g;
    if (const auto* aff = std::get_if<AffineModel>(&doc))
      g = GeneralModel1D::from_affine(*aff, xmin, xmax);
    else
      g = std::get<GeneralModel1D>(doc);
    ldp::Grid1D grid{xmin, xmax, bell_n};
    const ldp::ErgodicSolution1D sol =
        ldp::solve_ergodic_bellman(g, bell_lambda, grid);
    std::filesystem::create_directories(opt.out_dir);
    ldp::write_ergodic_csv(sol, opt.out_dir + "/bellman1d.csv");
    nlohmann::json meta{{"lambda", bell_lambda},
                        {"Lambda", sol.Lambda},
                        {"residual", sol.residual},
                        {"grid", {{"x_min", xmin}, {"x_max", xmax}, {"n", bell_n}}}};
    write_file(opt.out_dir, "bellman1d.json", meta.dump(2));
    std::cout << opt.out_dir + "/bellman1d.csv" << "\n";
    return 0;
  }

  // simulate
  const AffineModel m = require_affine(doc);
  ldp::SimConfig config;
  config.horizon = horizon;
  config.dt = dt;
  config.n_paths = n_paths;
  config.seed = seed;
  if (estimator == "growth") {
    if (tilted) config.tilt = ldp::make_tilt_at_lambda(m, sim_lambda);
    const auto policy =
        ldp::make_policy(ldp::portfolio_at_lambda(m, sim_lambda), m);
    const ldp::GrowthEstimate est =
        ldp::estimate_growth_rate(m, policy, sim_lambda, config);
    write_file(opt.out_dir, "simulate.json",
               ldp::growth_estimate_to_json(est, config));
  } else {
    if (tilted) config.tilt = ldp::make_optimal_tilt(m, sim_q);
    const auto policy = ldp::make_policy(ldp::optimal_portfolio(m, sim_q), m);
    const ldp::TailEstimate est = ldp::estimate_tail_rate(
        m, policy, sim_q,
        side == "at_least" ? ldp::TailSide::AtLeast : ldp::TailSide::AtMost,
        config);
    write_file(opt.out_dir, "simulate.json",
               ldp::tail_estimate_to_json(est, config));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ldp::ValidationError& e) {
    std::cerr << nlohmann::json{{"error", "validation"}, {"message", e.what()}}
                     .dump()
              << "\n";
    return 2;
  } catch (const ldp::NumericalError& e) {
    std::cerr << nlohmann::json{{"error", "numerical"}, {"message", e.what()}}
                     .dump()
              << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}
                     .dump()
              << "\n";
    return 3;
  }
}
