#include "ldp/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ldp/errors.hpp"
#include "ldp/expr.hpp"

namespace ldp {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("model json: " + path + ": " + what);
}

const json& require(const json& obj, const std::string& key,
                    const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing key");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

Vector as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out(static_cast<int>(i)) = as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty())
    fail(path, "expected a non-empty array of rows");
  const size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) fail(path, "expected row-major nested arrays");
  Matrix out(v.size(), cols);
  for (size_t i = 0; i < v.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != cols)
      fail(row_path, "ragged rows");
    for (size_t j = 0; j < cols; ++j)
      out(static_cast<int>(i), static_cast<int>(j)) =
          as_number(v[i][j], row_path + "[" + std::to_string(j) + "]");
  }
  return out;
}

AffineModel parse_affine(const json& a) {
  AffineModel m;
  m.A1 = as_matrix(require(a, "A1", "affine"), "affine.A1");
  m.a2 = as_vector(require(a, "a2", "affine"), "affine.a2");
  m.r1 = as_vector(require(a, "r1", "affine"), "affine.r1");
  m.r2 = as_number(require(a, "r2", "affine"), "affine.r2");
  m.alpha1 = as_vector(require(a, "alpha1", "affine"), "affine.alpha1");
  m.alpha2 = as_number(require(a, "alpha2", "affine"), "affine.alpha2");
  m.Theta1 = as_matrix(require(a, "Theta1", "affine"), "affine.Theta1");
  m.theta2 = as_vector(require(a, "theta2", "affine"), "affine.theta2");
  m.b = as_matrix(require(a, "b", "affine"), "affine.b");
  m.beta = as_vector(require(a, "beta", "affine"), "affine.beta");
  m.sigma = as_matrix(require(a, "sigma", "affine"), "affine.sigma");
  m.validate();
  return m;
}

std::function<double(double)> scalar_fn(const json& v, const std::string& path) {
  if (v.is_number()) {
    const double c = v.get<double>();
    return [c](double) { return c; };
  }
  if (!v.is_string()) fail(path, "expected an expression string or number");
  try {
    return compile_expression(v.get<std::string>());
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
}

std::function<Vector(double)> vector_fn(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected an array of expressions");
  std::vector<std::function<double(double)>> comps;
  for (size_t i = 0; i < v.size(); ++i)
    comps.push_back(scalar_fn(v[i], path + "[" + std::to_string(i) + "]"));
  return [comps](double x) {
    Vector out(comps.size());
    for (size_t i = 0; i < comps.size(); ++i)
      out(static_cast<int>(i)) = comps[i](x);
    return out;
  };
}

GeneralModel1D parse_general(const json& g) {
  GeneralModel1D m;
  m.a = scalar_fn(require(g, "a", "general1d"), "general1d.a");
  m.r = scalar_fn(require(g, "r", "general1d"), "general1d.r");
  m.alpha = scalar_fn(require(g, "alpha", "general1d"), "general1d.alpha");
  m.theta = scalar_fn(require(g, "theta", "general1d"), "general1d.theta");
  m.b = vector_fn(require(g, "b", "general1d"), "general1d.b");
  m.sigma = vector_fn(require(g, "sigma", "general1d"), "general1d.sigma");
  m.beta = vector_fn(require(g, "beta", "general1d"), "general1d.beta");
  const json& dom = require(g, "domain", "general1d");
  if (!dom.is_array() || dom.size() != 2)
    fail("general1d.domain", "expected [min, max]");
  m.domain_min = as_number(dom[0], "general1d.domain[0]");
  m.domain_max = as_number(dom[1], "general1d.domain[1]");
  m.k = static_cast<int>(m.b(0.0).size());
  if (m.sigma(0.0).size() != m.k || m.beta(0.0).size() != m.k)
    fail("general1d", "b, sigma, beta must share the same length k");
  m.growth_K = g.contains("growth_K")
                   ? as_number(g["growth_K"], "general1d.growth_K")
                   : 0.0;
  m.validate();
  return m;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ModelDocument parse_model_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model json: ") + e.what());
  }
  if (doc.contains("affine")) return parse_affine(doc["affine"]);
  if (doc.contains("general1d")) return parse_general(doc["general1d"]);
  fail("(root)", "expected top-level key \"affine\" or \"general1d\"");
}

ModelDocument load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str());
}

std::string condition_report_to_json(const ConditionNReport& report) {
  json j;
  j["min_eig_sQ1s"] = report.min_eig_sQ1s;
  j["min_beta_Q2_beta"] = report.min_beta_Q2_beta;
  j["part1_ok"] = report.part1_ok;
  j["part2_ok"] = report.part2_ok;
  j["k_margin"] = report.k_margin;
  return j.dump(2);
}

void write_rate_curve_csv(const RateCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  const int l = curve.model.l();
  out << "lambda,F,stable";
  for (int j = 0; j < l; ++j) out << ",p2_" << (j + 1);
  out << "\n";
  out.precision(17);
  for (size_t i = 0; i < curve.lambdas.size(); ++i) {
    const bool finite = std::isfinite(curve.F[i]);
    out << curve.lambdas[i] << ","
        << (finite ? fmt(curve.F[i]) : "inf") << ","
        << (curve.riccati[i] && curve.riccati[i]->stable ? 1 : 0);
    for (int j = 0; j < l; ++j) {
      out << ",";
      if (finite && curve.p2[i].size() == l) out << fmt(curve.p2[i](j));
    }
    out << "\n";
  }
}

RateCurveCsv read_rate_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  RateCurveCsv out;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty csv: " + path);
  const int l = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    out.lambdas.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    out.F.push_back(cell == "inf" ? kInf : std::stod(cell));
    std::getline(ss, cell, ',');
    out.stable.push_back(std::stoi(cell));
    Vector p2(l);
    bool have = true;
    for (int j = 0; j < l; ++j) {
      if (!std::getline(ss, cell, ',') || cell.empty()) {
        have = false;
        continue;
      }
      p2(j) = std::stod(cell);
    }
    out.p2.push_back(have ? p2 : Vector());
  }
  return out;
}

std::string decay_to_json(const DecaySolution& d) {
  json j;
  j["q"] = d.q;
  j["lambda_hat"] = d.lambda_hat;
  j["J"] = d.J;
  j["J_out"] = d.J_out;
  j["J_short"] = d.J_short;
  j["degenerate"] = d.degenerate;
  j["saddle_certificate"] = d.saddle_certificate;
  return j.dump(2);
}

DecaySolution decay_from_json(const std::string& text) {
  const json j = json::parse(text);
  DecaySolution d;
  d.q = j.at("q").get<double>();
  d.lambda_hat = j.at("lambda_hat").get<double>();
  d.J = j.at("J").get<double>();
  d.J_out = j.at("J_out").get<double>();
  d.J_short = j.at("J_short").get<double>();
  d.degenerate = j.at("degenerate").get<bool>();
  d.saddle_certificate = j.at("saddle_certificate").get<double>();
  return d;
}

std::string portfolio_to_json(const AffinePortfolio& p) {
  json j;
  j["degenerate"] = p.degenerate;
  j["G"] = json::array();
  for (int i = 0; i < p.G.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < p.G.cols(); ++c) row.push_back(p.G(i, c));
    j["G"].push_back(row);
  }
  j["g0"] = std::vector<double>(p.g0.data(), p.g0.data() + p.g0.size());
  j["vhat_magnitude"] = p.vhat_magnitude;
  j["z"] = std::vector<double>(p.z.data(), p.z.data() + p.z.size());
  return j.dump(2);
}

AffinePortfolio portfolio_from_json(const std::string& text) {
  const json j = json::parse(text);
  AffinePortfolio p;
  p.degenerate = j.at("degenerate").get<bool>();
  const auto& G = j.at("G");
  p.G.resize(G.size(), G.empty() ? 0 : G[0].size());
  for (size_t i = 0; i < G.size(); ++i)
    for (size_t c = 0; c < G[i].size(); ++c)
      p.G(static_cast<int>(i), static_cast<int>(c)) = G[i][c].get<double>();
  const auto g0 = j.at("g0").get<std::vector<double>>();
  p.g0 = Eigen::Map<const Vector>(g0.data(), g0.size());
  p.vhat_magnitude = j.at("vhat_magnitude").get<double>();
  const auto z = j.at("z").get<std::vector<double>>();
  p.z = Eigen::Map<const Vector>(z.data(), z.size());
  return p;
}

void write_ergodic_csv(const ErgodicSolution1D& sol, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "x,g,u,m_hat\n";
  out.precision(17);
  for (int i = 0; i < sol.grid.n_points; ++i)
    out << sol.grid.x(i) << "," << sol.g[i] << "," << sol.u[i] << ","
        << sol.m_hat[i] << "\n";
}

ErgodicCsv read_ergodic_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  ErgodicCsv out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    out.x.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    out.g.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    out.u.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    out.m_hat.push_back(std::stod(cell));
  }
  return out;
}

std::string growth_estimate_to_json(const GrowthEstimate& e, const SimConfig& c) {
  json j;
  j["estimator"] = "growth";
  j["lambda"] = e.lambda;
  j["estimate"] = e.rate;
  j["std_error"] = e.std_error;
  j["n_effective"] = e.n_effective;
  j["degenerate_weights"] = e.degenerate_weights;
  j["params"] = {{"horizon", c.horizon}, {"dt", c.dt},
                 {"n_paths", c.n_paths}, {"seed", c.seed},
                 {"tilted", c.tilt.has_value()}};
  return j.dump(2);
}

std::string tail_estimate_to_json(const TailEstimate& e, const SimConfig& c) {
  json j;
  j["estimator"] = "tail";
  j["q"] = e.q;
  j["side"] = e.side == TailSide::AtLeast ? "at_least" : "at_most";
  j["estimate"] = e.rate;
  j["std_error"] = e.std_error;
  j["tilted"] = e.tilted;
  j["zero_hits"] = e.zero_hits;
  j["hits"] = e.hits;
  j["mean_L"] = e.mean_L;
  j["se_mean_L"] = e.se_mean_L;
  j["params"] = {{"horizon", c.horizon}, {"dt", c.dt},
                 {"n_paths", c.n_paths}, {"seed", c.seed}};
  return j.dump(2);
}

}  // namespace ldp
