#include "strata/types.hpp"

#include <cmath>
#include <limits>

namespace strata {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw DataError(msg);
}

bool is_binary(const BVec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0 && v[i] != 1) return false;
  }
  return true;
}

}  // namespace

Vec GroundTruth::e01() const {
  if (!principal_scores) throw DataError("ground truth has no principal scores");
  return principal_scores->col(kHarmful);
}

Vec GroundTruth::true_m1() const {
  if (m1) return *m1;
  if (!principal_scores) throw DataError("ground truth has neither m1 nor principal scores");
  return principal_scores->col(kHarmless) + principal_scores->col(kUseful);
}

Vec GroundTruth::true_m0() const {
  if (m0) return *m0;
  if (!principal_scores) throw DataError("ground truth has neither m0 nor principal scores");
  return principal_scores->col(kHarmless) + principal_scores->col(kHarmful);
}

void Dataset::validate() const {
  const Eigen::Index nn = d.size();
  require(nn >= 1, "dataset must contain at least one unit");
  require(y.size() == nn, "treatment and outcome lengths differ");
  require(x.rows() == nn, "covariate rows do not match unit count");
  require(is_binary(d), "treatment column contains values outside {0,1}");
  require(is_binary(y), "outcome column contains values outside {0,1}");
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < nn; ++i) {
      if (!std::isfinite(x(i, j))) {
        throw DataError("non-finite covariate at row " + std::to_string(i) +
                        ", column " + std::to_string(j));
      }
    }
  }
  if (!truth) return;

  const GroundTruth& t = *truth;
  require(t.y1.size() == nn && t.y0.size() == nn, "ground-truth length mismatch");
  require(is_binary(t.y1) && is_binary(t.y0), "potential outcomes must be 0/1");
  for (Eigen::Index i = 0; i < nn; ++i) {
    const int observed = d[i] == 1 ? t.y1[i] : t.y0[i];
    require(y[i] == observed, "observed outcome disagrees with potential outcome at row " +
                                  std::to_string(i));
  }
  if (t.principal_scores) {
    const Mat& e = *t.principal_scores;
    require(e.rows() == nn && e.cols() == 4, "principal scores must be n x 4");
    for (Eigen::Index i = 0; i < nn; ++i) {
      double sum = 0.0;
      for (int s = 0; s < 4; ++s) {
        require(e(i, s) >= -1e-12, "negative principal score");
        sum += e(i, s);
      }
      require(std::abs(sum - 1.0) <= 1e-12, "principal-score row does not sum to 1");
    }
  }
  if (t.m1 && t.principal_scores) {
    const Vec implied = t.principal_scores->col(kHarmless) + t.principal_scores->col(kUseful);
    require(((*t.m1) - implied).cwiseAbs().maxCoeff() <= 1e-12,
            "m1 disagrees with principal scores");
  }
  if (t.m0 && t.principal_scores) {
    const Vec implied = t.principal_scores->col(kHarmless) + t.principal_scores->col(kHarmful);
    require(((*t.m0) - implied).cwiseAbs().maxCoeff() <= 1e-12,
            "m0 disagrees with principal scores");
  }
}

Eigen::Index FeatureMap::output_dim(Eigen::Index input_dim) const {
  switch (kind) {
    case FeatureMapKind::Identity:
      return input_dim;
    case FeatureMapKind::Quadratic:
      return 2 * input_dim;
    case FeatureMapKind::QuadraticPerGroup: {
      const Eigen::Index rest = input_dim - 1;
      return 1 + 4 * rest;
    }
    case FeatureMapKind::Threshold1D:
      return 1;
  }
  return 0;
}

Vec FeatureMap::apply(const Eigen::Ref<const Vec>& row) const {
  switch (kind) {
    case FeatureMapKind::Identity:
      return row;
    case FeatureMapKind::Quadratic: {
      Vec out(2 * row.size());
      out.head(row.size()) = row;
      out.tail(row.size()) = row.array().square();
      return out;
    }
    case FeatureMapKind::QuadraticPerGroup: {
      if (group_column < 0 || group_column >= row.size()) {
        throw DataError("group column out of range for feature map");
      }
      const double g = row[group_column];
      Vec out(output_dim(row.size()));
      out[0] = g;  // group intercept shift; overall beta0 covers the base group
      Eigen::Index k = 1;
      for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (j == group_column) continue;
        const double v = row[j];
        out[k++] = (1.0 - g) * v;
        out[k++] = (1.0 - g) * v * v;
        out[k++] = g * v;
        out[k++] = g * v * v;
      }
      return out;
    }
    case FeatureMapKind::Threshold1D: {
      if (column < 0 || column >= row.size()) {
        throw DataError("threshold column out of range for feature map");
      }
      Vec out(1);
      out[0] = row[column];
      return out;
    }
  }
  throw DataError("unknown feature map");
}

Mat FeatureMap::apply_all(const Mat& x) const {
  Mat out(x.rows(), output_dim(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.row(i) = apply(x.row(i).transpose()).transpose();
  }
  return out;
}

FeatureMap FeatureMap::enriched() const {
  switch (kind) {
    case FeatureMapKind::Identity:
      return quadratic();
    case FeatureMapKind::Threshold1D:
      // contains quadratic-in-that-column, the richer 1-D class
      return quadratic();
    case FeatureMapKind::Quadratic:
    case FeatureMapKind::QuadraticPerGroup:
      return *this;
  }
  return *this;
}

bool operator==(const FeatureMap& a, const FeatureMap& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case FeatureMapKind::Threshold1D:
      return a.column == b.column;
    case FeatureMapKind::QuadraticPerGroup:
      return a.group_column == b.group_column;
    default:
      return true;
  }
}

double LinearPolicy::decision_value(const Eigen::Ref<const Vec>& row) const {
  const Vec phi = feature_map.apply(row);
  if (phi.size() != beta.size()) {
    throw DataError("policy coefficient length does not match feature dimension");
  }
  return beta0 + beta.dot(phi);
}

int LinearPolicy::decide(const Eigen::Ref<const Vec>& row) const {
  return decision_value(row) >= 0.0 ? 1 : 0;
}

BVec LinearPolicy::decide_all(const Mat& x) const {
  BVec out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = decide(x.row(i).transpose());
  }
  return out;
}

LinearPolicy LinearPolicy::treat_all() {
  LinearPolicy p;
  p.beta0 = std::numeric_limits<double>::infinity();
  p.beta = Vec::Zero(1);
  p.feature_map = FeatureMap::threshold1d(0);
  return p;
}

LinearPolicy LinearPolicy::treat_none() {
  LinearPolicy p;
  p.beta0 = -std::numeric_limits<double>::infinity();
  p.beta = Vec::Zero(1);
  p.feature_map = FeatureMap::threshold1d(0);
  return p;
}

void ScoreTable::validate() const {
  if (gamma0.size() != gamma1.size()) throw DataError("score table length mismatch");
  if (gamma0.size() == 0) throw DataError("empty score table");
  double max_abs = 0.0;
  for (Eigen::Index i = 0; i < gamma0.size(); ++i) {
    if (!std::isfinite(gamma0[i]) || !std::isfinite(gamma1[i])) {
      throw DataError("non-finite score at row " + std::to_string(i));
    }
    max_abs = std::max({max_abs, std::abs(gamma0[i]), std::abs(gamma1[i])});
  }
  if (std::abs(xi - max_abs) > 1e-12) {
    throw DataError("xi does not equal the realized max absolute score");
  }
}

ScoreTable ScoreTable::make(Vec g0, Vec g1, ScoreMethod method) {
  ScoreTable t;
  t.gamma0 = std::move(g0);
  t.gamma1 = std::move(g1);
  t.method = method;
  t.xi = 0.0;
  if (t.gamma0.size() > 0) {
    t.xi = std::max(t.gamma0.cwiseAbs().maxCoeff(), t.gamma1.cwiseAbs().maxCoeff());
  }
  t.validate();
  return t;
}

std::string to_string(Comparator c) {
  switch (c) {
    case Comparator::NeverTreat:
      return "never";
    case Comparator::AlwaysTreat:
      return "always";
    case Comparator::Oracle:
      return "oracle";
  }
  return "?";
}

std::string to_string(ScoreMethod m) {
  return m == ScoreMethod::IPW ? "ipw" : "dr";
}

void WeightTriple::validate() const {
  if (c1.size() != c0.size() || c1.size() != c.size()) {
    throw DataError("weight triple length mismatch");
  }
  for (Eigen::Index i = 0; i < c1.size(); ++i) {
    if (!std::isfinite(c1[i]) || !std::isfinite(c0[i]) || !std::isfinite(c[i])) {
      throw DataError("non-finite weight at row " + std::to_string(i));
    }
  }
}

int policy_decide(const LinearPolicy& pi, const Eigen::Ref<const Vec>& x) {
  return pi.decide(x);
}

}  // namespace strata
