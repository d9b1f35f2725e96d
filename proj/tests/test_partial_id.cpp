#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "strata/nuisance.hpp"
#include "strata/partial_id.hpp"
#include "strata/simulate.hpp"

using namespace strata;

namespace {

Vec single(double v) { return Vec::Constant(1, v); }

// Independent validity oracle: given (m1, m0, e01), reconstruct the four
// strata and check they form a distribution.
bool strata_valid(double m1, double m0, double e01) {
  const double e11 = m0 - e01;
  const double e10 = m1 - e11;
  const double e00 = 1.0 - e11 - e10 - e01;
  const double eps = 1e-12;
  for (const double e : {e00, e10, e01, e11}) {
    if (e < -eps || e > 1.0 + eps) return false;
  }
  return std::abs(e00 + e10 + e01 + e11 - 1.0) <= 1e-9;
}

// Simulated sample with independent potential outcomes from known margins
// m1(x), m0(x); scores are known-propensity IPW.
struct MarginSample {
  Mat x;
  ScoreTable scores;
};

template <typename F1, typename F0>
MarginSample sample_from_margins(long n, F1 m1_of, F0 m0_of, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset data;
  data.x.resize(n, 1);
  data.d.resize(n);
  data.y.resize(n);
  for (long i = 0; i < n; ++i) {
    const double x = unif(rng);
    data.x(i, 0) = x;
    const int y1 = unif(rng) < m1_of(x) ? 1 : 0;
    const int y0 = unif(rng) < m0_of(x) ? 1 : 0;
    data.d[i] = unif(rng) < 0.5 ? 1 : 0;
    data.y[i] = data.d[i] == 1 ? y1 : y0;
  }
  const ScoreTable scores = score_ipw(data, Vec::Constant(n, 0.5));
  return {data.x, scores};
}

double fitted_threshold(const LinearPolicy& p) {
  // threshold1d policies store sign(orient) in beta and -orient*t in beta0
  return -p.beta0 / p.beta[0];
}

}  // namespace

TEST_CASE("bounds_from_means: displayed cases") {
  BoundPair b = bounds_from_means(single(0.7), single(0.4));
  CHECK(b.lower[0] == 0.0);
  CHECK(b.upper[0] == doctest::Approx(0.3));

  b = bounds_from_means(single(0.2), single(0.6));
  CHECK(b.lower[0] == doctest::Approx(0.4));
  CHECK(b.upper[0] == doctest::Approx(0.6));

  b = bounds_from_means(single(1.0), single(0.0));
  CHECK(b.lower[0] == 0.0);
  CHECK(b.upper[0] == 0.0);

  CHECK_THROWS_AS(bounds_from_means(single(1.2), single(0.0)), DataError);
}

TEST_CASE("bounds are sharp on a coarse grid (full grid runs in acceptance)") {
  for (int i1 = 0; i1 <= 20; ++i1) {
    for (int i0 = 0; i0 <= 20; ++i0) {
      const double m1 = i1 / 20.0;
      const double m0 = i0 / 20.0;
      const BoundPair b = bounds_from_means(single(m1), single(m0));
      for (int k = 0; k <= 20; ++k) {
        const double e01 = k / 20.0;
        const bool inside = e01 >= b.lower[0] - 1e-12 && e01 <= b.upper[0] + 1e-12;
        const bool outside = e01 < b.lower[0] - 1e-9 || e01 > b.upper[0] + 1e-9;
        if (inside) CHECK(strata_valid(m1, m0, e01));
        if (outside) CHECK_FALSE(strata_valid(m1, m0, e01));
      }
    }
  }
}

TEST_CASE("delta_plus closed form: sign and tie") {
  CHECK(delta_plus_closed_form(single(0.7), single(0.4))[0] == 1);
  CHECK(delta_plus_closed_form(single(0.2), single(0.6))[0] == 0);
  CHECK(delta_plus_closed_form(single(0.5), single(0.5))[0] == 1);
}

TEST_CASE("delta_plus equals 1{e11 >= e00} on exact strata") {
  // dyadic strata rows keep the identity m1 + m0 - 1 = e11 - e00 exact
  const double grid[] = {0.0, 0.125, 0.25, 0.375, 0.5};
  for (const double e00 : grid) {
    for (const double e10 : grid) {
      for (const double e01 : grid) {
        const double e11 = 1.0 - e00 - e10 - e01;
        if (e11 < 0.0) continue;
        const double m1 = e11 + e10;
        const double m0 = e11 + e01;
        CHECK(delta_plus_closed_form(single(m1), single(m0))[0] == (e00 <= e11 ? 1 : 0));
      }
    }
  }
}

TEST_CASE("fit_delta_plus recovers a known threshold at n=5000") {
  // m0 + m1 - 1 = x - 0.5: single sign change at 0.5
  const auto sample = sample_from_margins(
      5000, [](double x) { return 0.25 + 0.5 * x; }, [](double x) { return 0.25 + 0.5 * x; },
      2024);
  const PolicyFit fit =
      fit_delta_plus(sample.x, sample.scores, FeatureMap::threshold1d(0), SolverOptions{});
  CHECK(fit.policy.beta[0] == 1.0);  // treat-above orientation
  CHECK(fitted_threshold(fit.policy) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(fitted_threshold(fit.policy) - 0.5) <= 0.05);
}

TEST_CASE("fit_delta_tau recovers a CATE sign change at 0.3") {
  // tau(x) = 2.4 (x - 0.3) over x in [0, 0.6]
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const long n = 5000;
  Dataset data;
  data.x.resize(n, 1);
  data.d.resize(n);
  data.y.resize(n);
  for (long i = 0; i < n; ++i) {
    const double x = 0.6 * unif(rng);
    data.x(i, 0) = x;
    const int y1 = unif(rng) < 0.1 + 1.2 * x ? 1 : 0;
    const int y0 = unif(rng) < 0.82 - 1.2 * x ? 1 : 0;
    data.d[i] = unif(rng) < 0.5 ? 1 : 0;
    data.y[i] = data.d[i] == 1 ? y1 : y0;
  }
  const ScoreTable scores = score_ipw(data, Vec::Constant(n, 0.5));
  const PolicyFit fit =
      fit_delta_tau(data.x, scores, FeatureMap::threshold1d(0), SolverOptions{});
  CHECK(std::abs(fitted_threshold(fit.policy) - 0.3) <= 0.05);
}

TEST_CASE("uniform positive weights give the always-1 classifier") {
  Dataset data;
  const long n = 50;
  data.x = Mat::Random(n, 1);
  data.d = BVec::Ones(n);
  data.d[0] = 0;  // keep both arms populated
  data.y = BVec::Ones(n);
  const ScoreTable scores = score_ipw(data, Vec::Constant(n, 0.5));
  const PolicyFit fit =
      fit_delta_plus(data.x, scores, FeatureMap::threshold1d(0), SolverOptions{});
  CHECK(fit.policy.decide_all(data.x).sum() == n);
}

TEST_CASE("flipping every weight sign complements the classifier") {
  const auto sample = sample_from_margins(
      400, [](double x) { return 0.2 + 0.6 * x; }, [](double x) { return 0.8 - 0.6 * x; }, 5);
  WeightTriple plus, minus;
  plus.c1 = Vec::Constant(400, 1.0);
  plus.c0 = Vec::Constant(400, 1.0);
  plus.c = Vec::Constant(400, -1.0);
  minus.c1 = -plus.c1;
  minus.c0 = -plus.c0;
  minus.c = -plus.c;

  const FeatureMap cls = FeatureMap::threshold1d(0);
  const PolicyFit a = minimize_weighted(sample.x, sample.scores, plus, cls, SolverOptions{});
  const PolicyFit b = minimize_weighted(sample.x, sample.scores, minus, cls, SolverOptions{});
  const BVec da = a.policy.decide_all(sample.x);
  const BVec db = b.policy.decide_all(sample.x);
  // IPW scores on this DGP never hit the exact tie, so decisions complement
  CHECK((da.array() + db.array() == 1).all());
  // negating the weights negates the objective at matching decisions
  const auto prob_plus = build_problem(sample.x, sample.scores, plus, cls);
  const auto prob_minus = build_problem(sample.x, sample.scores, minus, cls);
  CHECK(problem_objective(prob_minus, db) ==
        doctest::Approx(-problem_objective(prob_plus, db)).epsilon(1e-12));
  // labels flip while the magnitudes stay put
  CHECK((prob_plus.pseudo_labels + prob_minus.pseudo_labels).cwiseAbs().maxCoeff() == 0);
  CHECK((prob_plus.weights - prob_minus.weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero treatment effect: flat objective, documented tie output") {
  const long n = 100;
  Mat x = Mat::Random(n, 1);
  Vec m = Vec::Constant(n, 0.4);
  const ScoreTable scores = ScoreTable::make(m, m, ScoreMethod::DR);
  const PolicyFit fit = fit_delta_tau(x, scores, FeatureMap::threshold1d(0), SolverOptions{});
  CHECK(fit.objective == 0.0);
  // ties resolve toward treating fewer units
  CHECK(fit.policy.decide_all(x).sum() == 0);
}

TEST_CASE("delta_tau closed form equals the symmetric zero-cost rule") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec m1(200), m0(200);
  for (int i = 0; i < 200; ++i) {
    m1[i] = unif(rng);
    m0[i] = unif(rng);
  }
  const BVec d = delta_tau_closed_form(m1, m0);
  for (int i = 0; i < 200; ++i) CHECK(d[i] == (m1[i] - m0[i] >= 0.0 ? 1 : 0));
}

TEST_CASE("worst-case error rates: endpoints and the single-unit case") {
  const long n = 64;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec m1(n), m0(n);
  for (long i = 0; i < n; ++i) {
    m1[i] = unif(rng);
    m0[i] = unif(rng);
  }
  const BVec dplus = delta_plus_closed_form(m1, m0);

  const ErrorRateBounds never = worst_case_error_rates(BVec::Zero(n), m1, m0, dplus);
  CHECK(never.fp_sup == 0.0);
  const ErrorRateBounds always = worst_case_error_rates(BVec::Ones(n), m1, m0, dplus);
  CHECK(always.fn_sup == 0.0);

  const ErrorRateBounds one =
      worst_case_error_rates(BVec::Ones(1), single(0.7), single(0.4), BVec::Ones(1));
  CHECK(one.fp_sup == doctest::Approx(0.3));
}

TEST_CASE("worst-case FP of pi and of its complement partition mean(U)") {
  const long n = 200;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec m1(n), m0(n);
  BVec pi(n);
  for (long i = 0; i < n; ++i) {
    m1[i] = unif(rng);
    m0[i] = unif(rng);
    pi[i] = unif(rng) < 0.5 ? 1 : 0;
  }
  const BVec dplus = delta_plus_closed_form(m1, m0);
  const BoundPair bounds = bounds_from_means(m1, m0);

  const double fp_pi = worst_case_error_rates(pi, m1, m0, dplus).fp_sup;
  const double fp_comp = worst_case_error_rates(BVec::Ones(n) - pi, m1, m0, dplus).fp_sup;
  CHECK(fp_pi + fp_comp == doctest::Approx(bounds.upper.mean()).epsilon(1e-12));
}

TEST_CASE("plug-in delta_plus flag matches the closed form on estimates") {
  Vec m1(3), m0(3);
  m1 << 0.7, 0.2, 0.5;
  m0 << 0.4, 0.6, 0.5;
  const BVec a = delta_plus_plugin(m1, m0);
  const BVec b = delta_plus_closed_form(m1, m0);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0);
}
