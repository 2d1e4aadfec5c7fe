#pragma once

#include <string>
#include <variant>

#include "ldp/bellman1d.hpp"
#include "ldp/model.hpp"
#include "ldp/rate.hpp"
#include "ldp/simulate.hpp"

namespace ldp {

// A model document holds either an affine model or a general 1-d model
// (top-level key "affine" or "general1d").
using ModelDocument = std::variant<AffineModel, GeneralModel1D>;

ModelDocument load_model_json(const std::string& path);
ModelDocument parse_model_json(const std::string& text);

std::string condition_report_to_json(const ConditionNReport& report);

void write_rate_curve_csv(const RateCurve& curve, const std::string& path);
// Parses the numeric columns back (lambda, F, stable, p2_*).
struct RateCurveCsv {
  std::vector<double> lambdas, F;
  std::vector<int> stable;
  std::vector<Vector> p2;
};
RateCurveCsv read_rate_curve_csv(const std::string& path);

std::string decay_to_json(const DecaySolution& d);
DecaySolution decay_from_json(const std::string& text);

std::string portfolio_to_json(const AffinePortfolio& p);
AffinePortfolio portfolio_from_json(const std::string& text);

void write_ergodic_csv(const ErgodicSolution1D& sol, const std::string& path);
struct ErgodicCsv {
  std::vector<double> x, g, u, m_hat;
};
ErgodicCsv read_ergodic_csv(const std::string& path);

std::string growth_estimate_to_json(const GrowthEstimate& e, const SimConfig& c);
std::string tail_estimate_to_json(const TailEstimate& e, const SimConfig& c);

}  // namespace ldp
