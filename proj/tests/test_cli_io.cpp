#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ldp/errors.hpp"
#include "ldp/io.hpp"

using namespace ldp;

namespace {

const std::string kFixtureR = std::string(LDP_FIXTURES_DIR) + "/instance_R.json";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("ldp_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(LDP_CLI_PATH) + " " + args +
                                  " > /dev/null 2> /dev/null")
                                     .c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("fixture parses to the reference instance") {
  const ModelDocument doc = load_model_json(kFixtureR);
  const auto& m = std::get<AffineModel>(doc);
  CHECK(m.n() == 1);
  CHECK(m.l() == 1);
  CHECK(m.k() == 3);
  CHECK(m.Theta1(0, 0) == -1.0);
  CHECK(m.sigma(0, 1) == 1.0);
}

TEST_CASE("schema errors carry the offending key path") {
  SUBCASE("missing key") {
    try {
      parse_model_json(R"json({"affine": {"A1": [[0.5]]}})json");
      FAIL("expected a throw");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("affine.a2") != std::string::npos);
    }
  }
  SUBCASE("ragged matrix") {
    try {
      parse_model_json(R"json({"affine": {"A1": [[0.5], [0.1, 0.2]]}})json");
      FAIL("expected a throw");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("affine.A1") != std::string::npos);
    }
  }
  SUBCASE("unknown top-level key") {
    CHECK_THROWS_AS(parse_model_json(R"json({"model": {}})json"), ValidationError);
  }
  SUBCASE("malformed expression") {
    const std::string text = R"json({"general1d": {
      "a": "x +* 2", "r": 0, "alpha": 0, "theta": "-x",
      "b": [1, 0], "sigma": [0, 1], "beta": [0, 1],
      "domain": [-4, 4]}})json";
    try {
      parse_model_json(text);
      FAIL("expected a throw");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("general1d.a") != std::string::npos);
    }
  }
}

TEST_CASE("general model expressions evaluate") {
  const std::string text = R"json({"general1d": {
    "a": "0.5 * x + 0.1", "r": 0, "alpha": 0,
    "theta": "-x - 0.3 * sin(x)",
    "b": [1, 0, 0], "sigma": [0, 1, 0], "beta": [0, 0, 1],
    "domain": [-8, 8], "growth_K": 2.0}})json";
  const ModelDocument doc = parse_model_json(text);
  const auto& g = std::get<GeneralModel1D>(doc);
  CHECK(g.a(2.0) == doctest::Approx(1.1));
  CHECK(g.theta(1.0) == doctest::Approx(-1.0 - 0.3 * std::sin(1.0)));
  CHECK(g.sigma(0.0)(1) == doctest::Approx(1.0));
  CHECK(g.k == 3);
  CHECK(g.growth_K == 2.0);
}

TEST_CASE("rate curve csv round-trips") {
  const auto dir = temp_dir("curve");
  const AffineModel m = std::get<AffineModel>(load_model_json(kFixtureR));
  const RateCurve curve = build_rate_curve(m, -2.0, 0.9, 30);
  const std::string path = (dir / "curve.csv").string();
  write_rate_curve_csv(curve, path);
  const RateCurveCsv back = read_rate_curve_csv(path);
  REQUIRE(back.lambdas.size() == curve.lambdas.size());
  for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
    CHECK(back.lambdas[i] == doctest::Approx(curve.lambdas[i]).epsilon(1e-12));
    if (std::isfinite(curve.F[i])) {
      CHECK(back.F[i] == doctest::Approx(curve.F[i]).epsilon(1e-12));
      CHECK(back.p2[i](0) == doctest::Approx(curve.p2[i](0)).epsilon(1e-12));
    } else {
      CHECK(!std::isfinite(back.F[i]));
    }
  }
}

TEST_CASE("decay and portfolio json round-trips") {
  const AffineModel m = std::get<AffineModel>(load_model_json(kFixtureR));
  const RateCurve curve = build_rate_curve(m, -1.0, 0.0, 2);
  const DecaySolution d = decay_rates(curve, -0.2);
  const DecaySolution d2 = decay_from_json(decay_to_json(d));
  CHECK(d2.q == d.q);
  CHECK(d2.lambda_hat == d.lambda_hat);
  CHECK(d2.J == d.J);
  CHECK(d2.J_short == d.J_short);
  CHECK(d2.degenerate == d.degenerate);

  const AffinePortfolio p = optimal_portfolio(m, -0.2);
  const AffinePortfolio p2 = portfolio_from_json(portfolio_to_json(p));
  CHECK(p2.degenerate == p.degenerate);
  CHECK((p2.G - p.G).norm() == 0.0);
  CHECK((p2.g0 - p.g0).norm() == 0.0);
}

TEST_CASE("ergodic csv round-trips") {
  const auto dir = temp_dir("ergodic");
  const AffineModel m = std::get<AffineModel>(load_model_json(kFixtureR));
  const GeneralModel1D g = GeneralModel1D::from_affine(m, -8.0, 8.0);
  const ErgodicSolution1D sol =
      solve_ergodic_bellman(g, -1.0, Grid1D{-8.0, 8.0, 129});
  const std::string path = (dir / "bellman.csv").string();
  write_ergodic_csv(sol, path);
  const ErgodicCsv back = read_ergodic_csv(path);
  REQUIRE(back.x.size() == sol.g.size());
  for (std::size_t i = 0; i < back.x.size(); ++i) {
    CHECK(back.g[i] == doctest::Approx(sol.g[i]).epsilon(1e-12));
    CHECK(back.m_hat[i] == doctest::Approx(sol.m_hat[i]).epsilon(1e-12));
  }
}

TEST_CASE("cli subcommands produce artifacts and exit codes") {
  const auto dir = temp_dir("cli");
  const std::string out = " --out " + dir.string();

  SUBCASE("check") {
    CHECK(run_cli("check " + kFixtureR + out) == 0);
    const std::string body = slurp((dir / "check.json").string());
    CHECK(body.find("part1_ok") != std::string::npos);
  }
  SUBCASE("rate curve") {
    CHECK(run_cli("rate-curve --lmin -1 --lmax 0.5 --n 16 " + kFixtureR + out) == 0);
    const RateCurveCsv csv = read_rate_curve_csv((dir / "rate_curve.csv").string());
    CHECK(csv.lambdas.size() == 16);
  }
  SUBCASE("decay") {
    CHECK(run_cli("decay --q -0.4 " + kFixtureR + out) == 0);
    const DecaySolution d = decay_from_json(slurp((dir / "decay.json").string()));
    CHECK(d.q == -0.4);
    CHECK(d.lambda_hat < 0.0);
  }
  SUBCASE("portfolio") {
    CHECK(run_cli("portfolio --q -0.4 " + kFixtureR + out) == 0);
    const AffinePortfolio p =
        portfolio_from_json(slurp((dir / "portfolio.json").string()));
    CHECK_FALSE(p.degenerate);
  }
  SUBCASE("bellman") {
    CHECK(run_cli("bellman1d --lambda -1 --grid 129 " + kFixtureR + out) == 0);
    CHECK(std::filesystem::exists(dir / "bellman1d.csv"));
    CHECK(std::filesystem::exists(dir / "bellman1d.json"));
  }
  SUBCASE("simulate") {
    CHECK(run_cli("simulate --estimator growth --lambda -0.5 --horizon 2 "
                  "--paths 500 " +
                  kFixtureR + out) == 0);
    CHECK(std::filesystem::exists(dir / "simulate.json"));
  }
  SUBCASE("runs are idempotent") {
    CHECK(run_cli("check " + kFixtureR + out) == 0);
    const std::string first = slurp((dir / "check.json").string());
    CHECK(run_cli("check " + kFixtureR + out) == 0);
    CHECK(slurp((dir / "check.json").string()) == first);
  }
}

TEST_CASE("cli failure exit codes") {
  const auto dir = temp_dir("cli_fail");
  const std::string out = " --out " + dir.string();

  SUBCASE("schema violation exits 2") {
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << R"json({"affine": {"A1": [[0.5]]}})json";
    CHECK(run_cli("check " + bad.string() + out) == 2);
  }
  SUBCASE("missing file exits nonzero") {
    CHECK(run_cli("check " + (dir / "nope.json").string() + out) != 0);
  }
  SUBCASE("numerical failure exits 3") {
    // Valid on its declared domain, but the drift still pushes outward at
    // the right edge of the narrower solver grid.
    const auto drifting = dir / "drifting.json";
    std::ofstream(drifting) << R"json({"general1d": {
      "a": "0.5 * x + 0.1", "r": 0, "alpha": 0, "theta": "-x + 3",
      "b": [1, 0, 0], "sigma": [0, 1, 0], "beta": [0, 0, 1],
      "domain": [-8, 8]}})json";
    CHECK(run_cli("bellman1d --lambda -1 --grid 129 --xmin -2 --xmax 2 " +
                  drifting.string() + out) == 3);
  }
}
