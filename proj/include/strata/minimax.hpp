#pragma once

#include <optional>

#include "strata/solvers.hpp"
#include "strata/types.hpp"

namespace strata {

// Inputs for the worst-case-regret weight construction. Constant comparators
// need only the classifier their branch uses; the oracle comparator needs
// delta_tau, delta_plus and the two constant-comparator minimax policies (or
// their symmetric-reduction stand-ins).
struct ComparatorContext {
  Comparator comparator = Comparator::NeverTreat;
  UtilitySpec utility;
  BVec delta_tau;
  BVec delta_plus;
  std::optional<BVec> pi_star_never;
  std::optional<BVec> pi_star_always;

  void validate() const;
};

// Per-unit (c1, c0, c) of the worst-case regret -E[pi(c1 m1 + c0 m0 + c)] + C,
// branching on the comparator and sign(u_g - u_l).
WeightTriple build_weights(const ComparatorContext& ctx);

// 1{u_g (m1 - m0) >= c}: the oracle under a symmetric utility.
BVec symmetric_oracle(const Vec& m1, const Vec& m0, const UtilitySpec& utility);

// 1{tau >= ((u_l - u_g)/u_g) e01 + c/u_g}: the infeasible oracle that knows
// the harmed-stratum score. e01 must lie inside the identification bounds.
BVec asymmetric_oracle(const Vec& m1, const Vec& m0, const Vec& e01, const UtilitySpec& utility);

// Closed-form population minimax policies, written from the displayed case
// rows (kept independent of build_weights so the two routes cross-check).
// The oracle comparator requires cost == 0 and throws otherwise, pointing at
// the empirical oracle fit.
BVec corollary_policy(Comparator comparator, const UtilitySpec& utility, const Vec& m1,
                      const Vec& m0, const BVec& delta_plus, const BVec& delta_tau);

struct MinimaxFit {
  LinearPolicy policy;
  Comparator comparator = Comparator::NeverTreat;
  PolicyFit delta_plus;
  double objective = 0.0;  // in-sample worst-case-regret objective of policy
  SolverDiagnostics diagnostics;
};

// Empirical minimax policy relative to the constant comparator the utility
// asymmetry makes non-trivial: always-treat when u_g > u_l, never-treat when
// u_g < u_l. At u_g == u_l both reduce to the symmetric policy; the
// never-treat label is used.
MinimaxFit fit_minimax_constant(const Mat& x, const ScoreTable& scores,
                                const UtilitySpec& utility, const FeatureMap& pi_class,
                                const FeatureMap& delta_class, const SolverOptions& solver);

struct OracleNuisances {
  PolicyFit delta_plus;
  PolicyFit delta_tau;
  LinearPolicy pi_never;
  LinearPolicy pi_always;
  bool symmetric_side_reused_delta_tau = false;
};

struct OracleFit {
  LinearPolicy policy;
  OracleNuisances nuisances;
  WeightTriple weights;
  double objective = 0.0;
  SolverDiagnostics diagnostics;
};

struct OracleClasses {
  FeatureMap pi;           // final policy class
  FeatureMap pi_prime;     // constant-comparator nuisance policies
  FeatureMap delta_plus;
  FeatureMap delta_tau;
};

// Empirical minimax policy relative to the oracle: fits delta_plus and
// delta_tau, the constant-comparator policies (reusing delta_tau for the
// symmetric side when cost == 0), builds the oracle weights and minimizes
// the weighted objective over the final class.
OracleFit fit_minimax_oracle(const Mat& x, const ScoreTable& scores, const UtilitySpec& utility,
                             const OracleClasses& classes, const SolverOptions& solver);

}  // namespace strata
