#include "strata/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>

#include "strata/errors.hpp"

namespace strata {

Vec OutcomeModel::predict_all(const Mat& x) const {
  Vec out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i).transpose());
  return out;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

class LogisticModel final : public OutcomeModel {
 public:
  LogisticModel(Vec coef) : coef_(std::move(coef)) {}

  double predict(const Eigen::Ref<const Vec>& row) const override {
    if (row.size() + 1 != coef_.size()) throw DataError("logistic model dimension mismatch");
    double z = coef_[0];
    for (Eigen::Index j = 0; j < row.size(); ++j) z += coef_[j + 1] * row[j];
    return sigmoid(z);
  }

 private:
  Vec coef_;  // intercept first
};

// IRLS with a small ridge to keep separable fits finite.
std::unique_ptr<OutcomeModel> fit_logistic(const Mat& x, const Vec& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols() + 1;
  Mat design(n, p);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;

  Vec coef = Vec::Zero(p);
  const double ridge = 1e-6;
  for (int iter = 0; iter < 100; ++iter) {
    Vec eta = design * coef;
    Vec mu(n), wts(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = sigmoid(eta[i]);
      wts[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
    }
    Vec grad = design.transpose() * (y - mu) - ridge * coef;
    Mat hess = design.transpose() * wts.asDiagonal() * design;
    hess.diagonal().array() += ridge;
    Vec step = hess.ldlt().solve(grad);
    coef += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10 || grad.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  return std::make_unique<LogisticModel>(std::move(coef));
}

struct Stump {
  int feature = -1;  // -1: constant round, no split
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;

  double eval(const Eigen::Ref<const Vec>& row) const {
    if (feature < 0) return left;
    return row[feature] < threshold ? left : right;
  }
};

class BoostedStumpsModel final : public OutcomeModel {
 public:
  BoostedStumpsModel(double base, double shrinkage, std::vector<Stump> stumps)
      : base_(base), shrinkage_(shrinkage), stumps_(std::move(stumps)) {}

  double predict(const Eigen::Ref<const Vec>& row) const override {
    double f = base_;
    for (const Stump& s : stumps_) f += shrinkage_ * s.eval(row);
    return std::clamp(f, 0.0, 1.0);
  }

 private:
  double base_;
  double shrinkage_;
  std::vector<Stump> stumps_;
};

// Squared-error gradient boosting with depth-1 trees. Split search scans
// midpoints between consecutive distinct values per feature; ties prefer the
// smaller feature index, then the smaller threshold.
std::unique_ptr<OutcomeModel> fit_boosted_stumps(const Mat& x, const Vec& y, int rounds,
                                                 double shrinkage) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double base = y.mean();
  Vec f = Vec::Constant(n, base);

  std::vector<std::vector<Eigen::Index>> order(static_cast<size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    auto& ord = order[static_cast<size_t>(j)];
    ord.resize(static_cast<size_t>(n));
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(),
              [&](Eigen::Index a, Eigen::Index b) { return x(a, j) < x(b, j); });
  }

  std::vector<Stump> stumps;
  stumps.reserve(static_cast<size_t>(rounds));
  for (int round = 0; round < rounds; ++round) {
    const Vec resid = y - f;
    const double total = resid.sum();
    const double mean_gain = total * total / static_cast<double>(n);

    Stump best;
    best.left = total / static_cast<double>(n);
    double best_score = mean_gain;  // no-split fallback fits the mean residual
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& ord = order[static_cast<size_t>(j)];
      double left_sum = 0.0;
      for (Eigen::Index k = 0; k + 1 < n; ++k) {
        left_sum += resid[ord[static_cast<size_t>(k)]];
        const double xv = x(ord[static_cast<size_t>(k)], j);
        const double xn = x(ord[static_cast<size_t>(k + 1)], j);
        if (xn == xv) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = static_cast<double>(n - k - 1);
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (score > best_score + 1e-15) {
          best_score = score;
          best.feature = static_cast<int>(j);
          best.threshold = 0.5 * (xv + xn);
          best.left = left_sum / nl;
          best.right = right_sum / nr;
        }
      }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] += shrinkage * best.eval(x.row(i).transpose());
    }
    stumps.push_back(best);
  }
  return std::make_unique<BoostedStumpsModel>(base, shrinkage, std::move(stumps));
}

}  // namespace

std::unique_ptr<OutcomeModel> fit_learner(const LearnerSpec& spec, const Mat& x, const Vec& y) {
  if (x.rows() == 0) throw DataError("cannot fit a learner on an empty training set");
  if (x.rows() != y.size()) throw DataError("learner target length mismatch");
  switch (spec.kind) {
    case LearnerKind::Logistic:
      return fit_logistic(x, y);
    case LearnerKind::BoostedStumps:
      if (spec.rounds <= 0 || spec.shrinkage <= 0.0) {
        throw ConfigError("boosted stumps need positive rounds and shrinkage");
      }
      return fit_boosted_stumps(x, y, spec.rounds, spec.shrinkage);
    case LearnerKind::Known:
      throw ConfigError("known-propensity mode does not fit a model");
  }
  throw ConfigError("unknown learner");
}

void CrossFitPlan::validate(const Dataset& data) const {
  if (n_folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
  if (fold_assignment.size() != static_cast<size_t>(data.n())) {
    throw DataError("fold assignment length mismatch");
  }
  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<int> counts(static_cast<size_t>(n_folds), 0);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const int f = fold_assignment[static_cast<size_t>(i)];
      if (f < 0 || f >= n_folds) throw DataError("fold index out of range");
      if (data.d[i] == arm) ++counts[static_cast<size_t>(f)];
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    if (*hi - *lo > 1) throw DataError("folds are not balanced within a treatment arm");
  }
}

CrossFitPlan make_crossfit_plan(const Dataset& data, int n_folds, unsigned seed) {
  if (n_folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
  CrossFitPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.fold_assignment.assign(static_cast<size_t>(data.n()), 0);
  std::mt19937_64 rng(seed);
  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (data.d[i] == arm) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t k = 0; k < idx.size(); ++k) {
      plan.fold_assignment[static_cast<size_t>(idx[k])] = static_cast<int>(k % n_folds);
    }
  }
  plan.validate(data);
  return plan;
}

namespace {

Mat rows_subset(const Mat& x, const std::vector<Eigen::Index>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(idx[k]);
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

PropensityFit fit_propensity(const Dataset& data, const CrossFitPlan& plan,
                             const LearnerSpec& learner, double clip) {
  data.validate();
  PropensityFit fit;
  fit.clip = clip;

  if (learner.kind == LearnerKind::Known) {
    fit.known = true;
    if (learner.known_per_unit) {
      if (learner.known_per_unit->size() != data.n()) {
        throw DataError("known propensity vector length mismatch");
      }
      fit.d_hat = *learner.known_per_unit;
    } else {
      fit.d_hat = Vec::Constant(data.n(), learner.known_value);
    }
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (!(fit.d_hat[i] > 0.0 && fit.d_hat[i] < 1.0)) {
        throw DataError("known propensity must lie strictly inside (0,1)");
      }
    }
    return fit;
  }

  const int treated = data.d.sum();
  if (treated == 0 || treated == data.n()) {
    throw DataError("overlap error: both treatment arms must be non-empty");
  }
  plan.validate(data);

  const Vec target = data.d.cast<double>();
  fit.fold_predictions.resize(data.n(), plan.n_folds);
  for (int k = 0; k < plan.n_folds; ++k) {
    std::vector<Eigen::Index> train;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (plan.fold_assignment[static_cast<size_t>(i)] != k) train.push_back(i);
    }
    Vec sub_y(static_cast<Eigen::Index>(train.size()));
    for (size_t r = 0; r < train.size(); ++r) sub_y[static_cast<Eigen::Index>(r)] = target[train[r]];
    const auto model = fit_learner(learner, rows_subset(data.x, train), sub_y);
    fit.fold_predictions.col(k) = model->predict_all(data.x);
  }

  fit.d_hat.resize(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double raw = fit.fold_predictions(i, plan.fold_assignment[static_cast<size_t>(i)]);
    fit.d_hat[i] = std::clamp(raw, clip, 1.0 - clip);
  }
  return fit;
}

OutcomeFit fit_outcome(const Dataset& data, int arm, const CrossFitPlan& plan,
                       const LearnerSpec& learner) {
  data.validate();
  plan.validate(data);
  if (arm != 0 && arm != 1) throw DataError("arm must be 0 or 1");
  if (learner.kind == LearnerKind::Known) {
    throw ConfigError("known mode is a propensity feature; outcome models must be fit");
  }
  Eigen::Index arm_count = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) arm_count += data.d[i] == arm ? 1 : 0;
  if (arm_count == 0) throw DataError("arm " + std::to_string(arm) + " is empty");

  OutcomeFit fit;
  fit.arm = arm;
  fit.fold_predictions.resize(data.n(), plan.n_folds);
  for (int k = 0; k < plan.n_folds; ++k) {
    std::vector<Eigen::Index> train;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (data.d[i] == arm && plan.fold_assignment[static_cast<size_t>(i)] != k) train.push_back(i);
    }
    if (train.empty()) {
      throw DataError("arm " + std::to_string(arm) + " has no training units outside fold " +
                      std::to_string(k));
    }
    Vec sub_y(static_cast<Eigen::Index>(train.size()));
    for (size_t r = 0; r < train.size(); ++r) {
      sub_y[static_cast<Eigen::Index>(r)] = static_cast<double>(data.y[train[r]]);
    }
    const auto model = fit_learner(learner, rows_subset(data.x, train), sub_y);
    fit.fold_predictions.col(k) = model->predict_all(data.x);
  }

  fit.m_hat.resize(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    double pred;
    if (data.d[i] == arm) {
      pred = fit.fold_predictions(i, plan.fold_assignment[static_cast<size_t>(i)]);
    } else {
      std::vector<double> preds(static_cast<size_t>(plan.n_folds));
      for (int k = 0; k < plan.n_folds; ++k) preds[static_cast<size_t>(k)] = fit.fold_predictions(i, k);
      pred = median_of(std::move(preds));
    }
    fit.m_hat[i] = std::clamp(pred, 0.0, 1.0);
  }
  return fit;
}

ScoreTable score_ipw(const Dataset& data, const Vec& d_hat) {
  data.validate();
  if (d_hat.size() != data.n()) throw DataError("propensity length mismatch");
  Vec g0(data.n()), g1(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!(d_hat[i] > 0.0 && d_hat[i] < 1.0)) {
      throw DataError("propensity at 0 or 1 would divide by zero (row " + std::to_string(i) + ")");
    }
    const double y = static_cast<double>(data.y[i]);
    const double d = static_cast<double>(data.d[i]);
    g1[i] = y * d / d_hat[i];
    g0[i] = y * (1.0 - d) / (1.0 - d_hat[i]);
  }
  return ScoreTable::make(std::move(g0), std::move(g1), ScoreMethod::IPW);
}

ScoreTable score_dr(const Dataset& data, const Vec& d_hat, const Vec& m0_hat, const Vec& m1_hat) {
  data.validate();
  if (d_hat.size() != data.n() || m0_hat.size() != data.n() || m1_hat.size() != data.n()) {
    throw DataError("score inputs are not aligned");
  }
  Vec g0(data.n()), g1(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!(d_hat[i] > 0.0 && d_hat[i] < 1.0)) {
      throw DataError("propensity at 0 or 1 would divide by zero (row " + std::to_string(i) + ")");
    }
    if (!(m0_hat[i] >= 0.0 && m0_hat[i] <= 1.0) || !(m1_hat[i] >= 0.0 && m1_hat[i] <= 1.0)) {
      throw DataError("outcome predictions must lie in [0,1] (row " + std::to_string(i) + ")");
    }
    const double y = static_cast<double>(data.y[i]);
    const double d = static_cast<double>(data.d[i]);
    g1[i] = m1_hat[i] + (y - m1_hat[i]) * d / d_hat[i];
    g0[i] = m0_hat[i] + (y - m0_hat[i]) * (1.0 - d) / (1.0 - d_hat[i]);
  }
  return ScoreTable::make(std::move(g0), std::move(g1), ScoreMethod::DR);
}

}  // namespace strata
