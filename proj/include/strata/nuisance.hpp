#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "strata/types.hpp"

namespace strata {

enum class LearnerKind { Logistic, BoostedStumps, Known };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Logistic;
  int rounds = 200;        // boosted stumps
  double shrinkage = 0.1;  // boosted stumps
  double known_value = 0.5;             // Known: constant propensity
  std::optional<Vec> known_per_unit;    // Known: per-unit propensity

  static LearnerSpec logistic() { return {}; }
  static LearnerSpec boosted_stumps(int rounds = 200, double shrinkage = 0.1) {
    LearnerSpec s;
    s.kind = LearnerKind::BoostedStumps;
    s.rounds = rounds;
    s.shrinkage = shrinkage;
    return s;
  }
  static LearnerSpec known(double value) {
    LearnerSpec s;
    s.kind = LearnerKind::Known;
    s.known_value = value;
    return s;
  }
};

// Fitted regression of a binary target on covariates; predictions lie in
// [0,1] and are deterministic given the fit.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;
  virtual double predict(const Eigen::Ref<const Vec>& row) const = 0;
  Vec predict_all(const Mat& x) const;
};

std::unique_ptr<OutcomeModel> fit_learner(const LearnerSpec& spec, const Mat& x, const Vec& y);

// Per-unit fold indices, stratified so folds within each treatment arm
// differ in size by at most one.
struct CrossFitPlan {
  int n_folds = 3;
  unsigned seed = 0;
  std::vector<int> fold_assignment;

  void validate(const Dataset& data) const;
};

CrossFitPlan make_crossfit_plan(const Dataset& data, int n_folds = 3, unsigned seed = 0);

struct PropensityFit {
  Vec d_hat;          // clipped to [clip, 1-clip] unless known
  double clip = 0.01;
  bool known = false;
  Mat fold_predictions;  // n x K, prediction of each fold model (empty if known)
};

// Cross-fit propensity estimates: unit i is predicted by the model that
// excludes fold(i). Known-propensity specs pass through without fitting.
PropensityFit fit_propensity(const Dataset& data, const CrossFitPlan& plan,
                             const LearnerSpec& learner, double clip = 0.01);

struct OutcomeFit {
  Vec m_hat;  // in [0,1]
  int arm = 0;
  Mat fold_predictions;  // n x K, prediction of each fold model at every unit
};

// Cross-fit outcome regression m(w, x): units with D = w are predicted by
// the fold model that excludes them; units with D != w get the median across
// the fold models.
OutcomeFit fit_outcome(const Dataset& data, int arm, const CrossFitPlan& plan,
                       const LearnerSpec& learner);

ScoreTable score_ipw(const Dataset& data, const Vec& d_hat);
ScoreTable score_dr(const Dataset& data, const Vec& d_hat, const Vec& m0_hat, const Vec& m1_hat);

}  // namespace strata
