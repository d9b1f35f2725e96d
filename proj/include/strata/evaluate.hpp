#pragma once

#include <string>
#include <utility>
#include <vector>

#include "strata/minimax.hpp"
#include "strata/solvers.hpp"
#include "strata/types.hpp"

namespace strata {

// Expected utility of a policy under the principal-strata utility table,
// evaluated on known truth. The no-treatment baseline u(0; y1, y0) is fixed
// to y0; constant offsets cancel in every regret.
double policy_value(const BVec& pi, const GroundTruth& truth, const UtilitySpec& utility);

// mean((varpi - pi) (u_g tau + (u_g - u_l) e01 - c)); equals
// policy_value(varpi) - policy_value(pi) up to floating error.
double true_regret(const BVec& pi, const BVec& varpi, const GroundTruth& truth,
                   const UtilitySpec& utility);

// Policy-dependent part of the worst-case regret, -(1/n) sum pi (c1 g1 +
// c0 g0 + c), in estimation mode (scores) or population mode (true means).
double worst_case_regret(const BVec& pi, const ScoreTable& scores, const WeightTriple& weights);
double worst_case_regret_population(const BVec& pi, const Vec& m1, const Vec& m0,
                                    const WeightTriple& weights);

// The comparator-specific constant dropped from the objectives, so that
// population-mode worst-case regrets can be compared against true regrets.
double worst_case_constant(const ComparatorContext& ctx, const Vec& m1, const Vec& m0);

// Both sides of the excess-regret inequality and its delta_plus
// misclassification corollary. Expectations run over the empirical covariate
// measure; the sup term is enumerated over the supplied policy class.
struct RegretBoundReport {
  double excess_regret = 0.0;
  double sup_term = 0.0;
  double weight_term = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
  bool corollary_applicable = false;
  double delta_plus_misclass = 0.0;
  double corollary_term = 0.0;
  double corollary_rhs = 0.0;
  double corollary_slack = 0.0;
  bool corollary_holds = false;
};

RegretBoundReport check_regret_bound(const BVec& pi_hat, const BVec& pi_star,
                                     const ScoreTable& scores, const WeightTriple& true_weights,
                                     const WeightTriple& est_weights, const Vec& m1, const Vec& m0,
                                     const std::vector<BVec>& policy_class_decisions,
                                     const UtilitySpec& utility, double delta_plus_misclass);

// Enumerates the decision vectors of every 1-D threshold policy on a sample
// (all cuts, both orientations); used for exact sup terms and brute-force
// optima in small problems.
std::vector<BVec> enumerate_threshold_policies(const Vec& column);

struct FrontierPoint {
  std::string label;       // "u_l=<v>", "never" or "always"
  double u_l = 0.0;        // NaN for the constant endpoints
  bool symmetric = false;  // u_l == u_g marker
  bool failed = false;
  std::string error;
  Comparator comparator = Comparator::NeverTreat;
  double treated_fraction = 0.0;
  double fp_sup = 0.0;
  double fn_sup = 0.0;
  double expected_outcome = 0.0;
  LinearPolicy policy;
};

struct FrontierConfig {
  std::vector<double> u_l_grid;
  double u_g = 1.0;
  double cost = 0.0;
  bool oracle_comparator = false;  // constant comparators by default
  FeatureMap pi_class = FeatureMap::threshold1d(0);
  FeatureMap nuisance_class = FeatureMap::threshold1d(0);
  SolverOptions solver;
  int workers = 0;
};

struct FrontierResult {
  std::vector<FrontierPoint> points;  // endpoints first, then the sweep
  BVec delta_plus;                    // plug-in classifier used for the bounds
};

// Sweeps the utility grid, fitting the minimax policy at each point and
// recording worst-case error bounds, treated fraction and the plug-in
// expected outcome mean(Gamma_hat_{pi(X)}). Per-point failures are recorded
// and skipped.
FrontierResult frontier_sweep(const Mat& x, const ScoreTable& scores, const FrontierConfig& cfg);

// Lower convex envelope of a point cloud (minimal y over the hull), sorted
// by x; emitted next to raw frontier points.
std::vector<std::pair<double, double>> convex_lower_envelope(
    std::vector<std::pair<double, double>> points);

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace strata
