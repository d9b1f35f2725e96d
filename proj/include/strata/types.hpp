#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "strata/errors.hpp"

namespace strata {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using BVec = Eigen::VectorXi;  // binary 0/1 decisions and labels

// Column order of principal-score matrices: (e00, e10, e01, e11).
enum Stratum : int { kUseless = 0, kUseful = 1, kHarmful = 2, kHarmless = 3 };

// True potential-outcome side of a simulated dataset. m1/m0 and the
// principal scores are redundant given each other; when both are present
// they must satisfy m1 = e11 + e10 and m0 = e11 + e01 row-wise.
struct GroundTruth {
  BVec y1;
  BVec y0;
  std::optional<Mat> principal_scores;  // n x 4, rows sum to 1
  std::optional<Vec> m1;
  std::optional<Vec> m0;

  bool has_scores() const { return principal_scores.has_value(); }
  Vec e01() const;  // column kHarmful; throws if scores absent
  Vec true_m1() const;
  Vec true_m0() const;
};

// Per-column rescaling applied at ingestion; kept for report output.
struct ColumnScaling {
  std::string name;
  double min = 0.0;
  double max = 0.0;  // min == max means the column was constant -> all 0
};

struct Dataset {
  Mat x;   // n x p covariates, each column rescaled to [0,1] at ingestion
  BVec d;  // treatment
  BVec y;  // outcome
  std::optional<GroundTruth> truth;
  std::vector<ColumnScaling> scaling;  // empty when constructed in memory

  Eigen::Index n() const { return d.size(); }
  Eigen::Index p() const { return x.cols(); }
  void validate() const;  // throws DataError on any invariant violation
};

struct UtilitySpec {
  double u_g = 1.0;  // gain from a useful treatment
  double u_l = 1.0;  // loss magnitude from a harmful treatment
  double cost = 0.0;

  void validate() const {
    if (!(u_g > 0.0) || !(u_l > 0.0) || !(cost >= 0.0)) {
      throw DataError("utility spec requires u_g > 0, u_l > 0, cost >= 0");
    }
  }
  bool symmetric() const { return u_g == u_l; }
};

enum class FeatureMapKind { Identity, Quadratic, QuadraticPerGroup, Threshold1D };

// phi(x) used by linear decision rules. Identity keeps the covariates as-is;
// Quadratic appends per-column squares; QuadraticPerGroup interacts an
// intercept, each remaining column and its square with a binary group column;
// Threshold1D selects a single column.
struct FeatureMap {
  FeatureMapKind kind = FeatureMapKind::Identity;
  int column = 0;  // Threshold1D payload
  int group_column = 0;

  static FeatureMap identity() { return {FeatureMapKind::Identity, 0, 0}; }
  static FeatureMap quadratic() { return {FeatureMapKind::Quadratic, 0, 0}; }
  static FeatureMap quadratic_per_group(int group) {
    return {FeatureMapKind::QuadraticPerGroup, 0, group};
  }
  static FeatureMap threshold1d(int col) {
    return {FeatureMapKind::Threshold1D, col, 0};
  }

  Eigen::Index output_dim(Eigen::Index input_dim) const;
  Vec apply(const Eigen::Ref<const Vec>& row) const;
  Mat apply_all(const Mat& x) const;
  // One notch richer class for nuisance classifiers fitted over this map.
  FeatureMap enriched() const;
};

bool operator==(const FeatureMap& a, const FeatureMap& b);

// Deterministic rule 1{beta0 + beta . phi(x) >= 0}; the tie at exactly 0
// assigns treatment.
struct LinearPolicy {
  double beta0 = 0.0;
  Vec beta;
  FeatureMap feature_map;

  int decide(const Eigen::Ref<const Vec>& row) const;
  BVec decide_all(const Mat& x) const;
  double decision_value(const Eigen::Ref<const Vec>& row) const;

  static LinearPolicy treat_all();
  static LinearPolicy treat_none();
};

enum class ScoreMethod { IPW, DR };

// Per-unit estimated scores Gamma_hat_w with E[Gamma_w | X] = m(w, X).
struct ScoreTable {
  Vec gamma0;
  Vec gamma1;
  ScoreMethod method = ScoreMethod::IPW;
  double xi = 0.0;  // realized max_i,w |gamma_w|

  Eigen::Index n() const { return gamma0.size(); }
  void validate() const;
  static ScoreTable make(Vec g0, Vec g1, ScoreMethod method);
};

enum class Comparator { NeverTreat, AlwaysTreat, Oracle };

std::string to_string(Comparator c);
std::string to_string(ScoreMethod m);

// Covariate-indexed weight and cost functions (c1, c0, c) defining the
// worst-case-regret objective -E[pi(X){c1 Gamma1 + c0 Gamma0 + c}].
struct WeightTriple {
  Vec c1;
  Vec c0;
  Vec c;
  Comparator comparator = Comparator::NeverTreat;

  Eigen::Index n() const { return c1.size(); }
  void validate() const;
};

struct ConstraintSpec {
  double delta = 1.0;   // false-positive cap
  double budget = 1.0;  // treated-fraction cap

  void validate() const {
    if (delta < 0.0 || delta > 1.0 || budget < 0.0 || budget > 1.0) {
      throw DataError("constraint spec entries must lie in [0,1]");
    }
  }
};

int policy_decide(const LinearPolicy& pi, const Eigen::Ref<const Vec>& x);

}  // namespace strata
