#include "strata/partial_id.hpp"

#include <cmath>

#include "strata/errors.hpp"

namespace strata {

namespace {

void check_unit_interval(const Vec& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw DataError(std::string(name) + " entry outside [0,1] at row " + std::to_string(i));
    }
  }
}

}  // namespace

BoundPair bounds_from_means(const Vec& m1, const Vec& m0) {
  if (m1.size() != m0.size()) throw DataError("m1/m0 length mismatch");
  check_unit_interval(m1, "m1");
  check_unit_interval(m0, "m0");
  BoundPair b;
  b.lower.resize(m1.size());
  b.upper.resize(m1.size());
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    double lo = std::max(0.0, m0[i] - m1[i]);
    double hi = std::min(m0[i], 1.0 - m1[i]);
    if (hi < 0.0 && hi >= -1e-12) hi = 0.0;  // rounding from m-values near 1
    b.lower[i] = lo;
    b.upper[i] = hi;
    if (!(b.lower[i] <= b.upper[i] + 1e-12)) {
      throw DataError("empty identification interval at row " + std::to_string(i));
    }
  }
  return b;
}

BVec delta_plus_closed_form(const Vec& m1, const Vec& m0) {
  if (m1.size() != m0.size()) throw DataError("m1/m0 length mismatch");
  check_unit_interval(m1, "m1");
  check_unit_interval(m0, "m0");
  BVec out(m1.size());
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    out[i] = m0[i] + m1[i] - 1.0 >= 0.0 ? 1 : 0;
  }
  return out;
}

BVec delta_tau_closed_form(const Vec& m1, const Vec& m0) {
  if (m1.size() != m0.size()) throw DataError("m1/m0 length mismatch");
  BVec out(m1.size());
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    out[i] = m1[i] - m0[i] >= 0.0 ? 1 : 0;
  }
  return out;
}

BVec delta_plus_plugin(const Vec& m1_hat, const Vec& m0_hat) {
  return delta_plus_closed_form(m1_hat, m0_hat);
}

namespace {

PolicyFit fit_constant_weight_classifier(const Mat& x, const ScoreTable& scores, double c1,
                                         double c0, double c, const FeatureMap& policy_class,
                                         const SolverOptions& solver) {
  scores.validate();
  WeightTriple w;
  w.c1 = Vec::Constant(scores.n(), c1);
  w.c0 = Vec::Constant(scores.n(), c0);
  w.c = Vec::Constant(scores.n(), c);
  return minimize_weighted(x, scores, w, policy_class, solver);
}

}  // namespace

PolicyFit fit_delta_plus(const Mat& x, const ScoreTable& scores, const FeatureMap& policy_class,
                         const SolverOptions& solver) {
  return fit_constant_weight_classifier(x, scores, 1.0, 1.0, -1.0, policy_class, solver);
}

PolicyFit fit_delta_tau(const Mat& x, const ScoreTable& scores, const FeatureMap& policy_class,
                        const SolverOptions& solver) {
  return fit_constant_weight_classifier(x, scores, 1.0, -1.0, 0.0, policy_class, solver);
}

ErrorRateBounds worst_case_error_rates(const BVec& pi, const Vec& m1, const Vec& m0,
                                       const BVec& delta_plus) {
  const Eigen::Index n = pi.size();
  if (m1.size() != n || m0.size() != n || delta_plus.size() != n) {
    throw DataError("worst_case_error_rates inputs are not aligned");
  }
  ErrorRateBounds out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slack = static_cast<double>(delta_plus[i]) * (1.0 - m1[i] - m0[i]);
    out.fp_sup += static_cast<double>(pi[i]) * (m0[i] + slack);
    out.fn_sup += static_cast<double>(1 - pi[i]) * (m1[i] + slack);
  }
  out.fp_sup /= static_cast<double>(n);
  out.fn_sup /= static_cast<double>(n);
  return out;
}

}  // namespace strata
