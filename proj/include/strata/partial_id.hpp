#pragma once

#include "strata/solvers.hpp"
#include "strata/types.hpp"

namespace strata {

// Sharp identification bounds L(x) <= e01(x) <= U(x) for the harmed-stratum
// principal score.
struct BoundPair {
  Vec lower;
  Vec upper;
};

// L = max(0, m0 - m1), U = min(m0, 1 - m1). Differences within -1e-12 of
// zero are clamped to 0.
BoundPair bounds_from_means(const Vec& m1, const Vec& m0);

// delta_plus(x) = 1{m0 + m1 - 1 >= 0}; classifies e11(x) >= e00(x).
BVec delta_plus_closed_form(const Vec& m1, const Vec& m0);

// delta_tau(x) = 1{m1 - m0 >= 0}; classifies a non-negative CATE.
BVec delta_tau_closed_form(const Vec& m1, const Vec& m0);

// Weighted-classification fits of the two nuisance classifiers from scores:
// delta_plus minimizes -(1/n) sum delta(X_i){Gamma1 + Gamma0 - 1},
// delta_tau  minimizes -(1/n) sum delta(X_i){Gamma1 - Gamma0}.
PolicyFit fit_delta_plus(const Mat& x, const ScoreTable& scores, const FeatureMap& policy_class,
                         const SolverOptions& solver);
PolicyFit fit_delta_tau(const Mat& x, const ScoreTable& scores, const FeatureMap& policy_class,
                        const SolverOptions& solver);

// Plug-in alternative to the regret-minimizing fit.
BVec delta_plus_plugin(const Vec& m1_hat, const Vec& m0_hat);

// Worst-case error rates of a treatment rule over the identification set:
//   fp_sup = mean(pi * [m0 + delta_plus (1 - m1 - m0)])
//   fn_sup = mean((1-pi) * [m1 + delta_plus (1 - m1 - m0)])
// Pass score columns (gamma1, gamma0) in place of (m1, m0) for the plug-in
// estimation mode.
struct ErrorRateBounds {
  double fp_sup = 0.0;
  double fn_sup = 0.0;
};

ErrorRateBounds worst_case_error_rates(const BVec& pi, const Vec& m1, const Vec& m0,
                                       const BVec& delta_plus);

}  // namespace strata
