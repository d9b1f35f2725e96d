#pragma once

#include <string>
#include <vector>

#include "strata/types.hpp"

namespace strata {

// Weighted binary classification instance equivalent to the empirical
// worst-case-regret objective: minimizing -(1/n) sum pi(X_i) g_i over a
// policy class equals cost-sensitive classification with pseudo-labels
// y_i = sign(g_i) (0 maps to +1) and weights gamma_i = |g_i|.
struct WeightedClassificationProblem {
  Mat features;      // phi(X_i), one row per unit
  BVec pseudo_labels;  // in {-1, +1}
  Vec weights;       // gamma_i >= 0

  Eigen::Index n() const { return weights.size(); }
  void validate() const;
};

WeightedClassificationProblem build_problem(const Mat& x, const ScoreTable& scores,
                                            const WeightTriple& weights,
                                            const FeatureMap& feature_map);

// Empirical objective -(1/n) sum_{pi=1} y_i gamma_i for decisions on the
// problem's own rows.
double problem_objective(const WeightedClassificationProblem& problem, const BVec& decisions);

enum class SolverKind { ExactSearch1D, Svm };

struct SolverOptions {
  SolverKind kind = SolverKind::ExactSearch1D;
  double c_reg = 1.0;
  bool select_c = false;  // 5-fold selection over {0.01, 0.1, 1, 10, 100}
  double tolerance = 1e-6;
  long max_iter = 2000000;
  unsigned seed = 0;  // fold shuffling during C selection
};

struct SolverDiagnostics {
  std::string solver;
  long iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;           // empirical Eq-form objective of the fit
  double c_reg = 0.0;               // regularization actually used
  double beta0_unrestricted = 0.0;  // Appendix-style intercept average
  std::vector<double> objective_trace;
};

struct PolicyFit {
  LinearPolicy policy;
  double objective = 0.0;
  SolverDiagnostics diagnostics;
};

// Direct search over all thresholds (midpoints of sorted unique values plus
// +/-inf) and both orientations of a single feature column. Ties prefer the
// policy treating fewer units, then the smaller threshold, then the
// treat-above orientation.
PolicyFit solve_exact_1d(const WeightedClassificationProblem& problem, int column);

struct SvmSolution {
  double beta0 = 0.0;
  Vec beta;
  Vec alpha;
  double C_reg = 1.0;
  double kkt_residual = 0.0;
  long iterations = 0;
  bool converged = false;
  double beta0_unrestricted = 0.0;
  std::vector<double> objective_trace;
};

// Weighted soft-margin SVM dual solved by pairwise coordinate steps that
// preserve sum(y_i alpha_i) = 0, boxes 0 <= alpha_i <= gamma_i C. Stops when
// the maximal KKT violation is <= tolerance; throws SolverError with the
// residual when max_iter is exhausted first.
SvmSolution solve_svm(const WeightedClassificationProblem& problem, double C_reg,
                      double tolerance = 1e-6, long max_iter = 2000000);

// Dispatches to the exact search (Threshold1D classes) or the SVM surrogate,
// with optional cross-validated C selection, and packages the fitted policy.
PolicyFit minimize_weighted(const Mat& x, const ScoreTable& scores, const WeightTriple& weights,
                            const FeatureMap& policy_class, const SolverOptions& options);

}  // namespace strata
