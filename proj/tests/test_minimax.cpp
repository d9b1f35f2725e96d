#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <random>

#include "strata/evaluate.hpp"
#include "strata/minimax.hpp"
#include "strata/nuisance.hpp"
#include "strata/partial_id.hpp"
#include "strata/simulate.hpp"

using namespace strata;

namespace {

// Hand-coded worst-case-regret weight table, written straight from the
// displayed case analysis and kept independent of build_weights. The L_b row
// is indexed by delta_tau, the U_b row by delta_plus; never-treat takes L_b
// when u_g >= u_l and U_b otherwise, always-treat mirrors that, and the
// oracle combines them through the fitted constant-comparator policies.
struct HandTriple {
  double c1, c0, c;
};

HandTriple hand_lb(const UtilitySpec& u, int dt) {
  return {u.u_l + (u.u_g - u.u_l) * dt, -u.u_l - (u.u_g - u.u_l) * dt, -u.cost};
}

HandTriple hand_ub(const UtilitySpec& u, int dp) {
  return {u.u_g + dp * (u.u_l - u.u_g), -u.u_l - dp * (u.u_g - u.u_l),
          dp * (u.u_g - u.u_l) - u.cost};
}

HandTriple hand_weights(Comparator cmp, const UtilitySpec& u, int dp, int dt, int p0, int p1) {
  const bool gain_heavy = u.u_g >= u.u_l;
  const HandTriple lb = gain_heavy ? hand_lb(u, dt) : hand_ub(u, dp);
  const HandTriple ub = gain_heavy ? hand_ub(u, dp) : hand_lb(u, dt);
  switch (cmp) {
    case Comparator::NeverTreat:
      return lb;
    case Comparator::AlwaysTreat:
      return ub;
    case Comparator::Oracle:
      if (p0 == 1 && p1 == 1) return ub;
      if (p0 == 0 && p1 == 0) return lb;
      return {ub.c1 + lb.c1, ub.c0 + lb.c0, ub.c + lb.c};
  }
  return {0, 0, 0};
}

WeightTriple weights_for(Comparator cmp, const UtilitySpec& u, int dp, int dt, int p0, int p1) {
  ComparatorContext ctx;
  ctx.comparator = cmp;
  ctx.utility = u;
  ctx.delta_plus = BVec::Constant(1, dp);
  ctx.delta_tau = BVec::Constant(1, dt);
  ctx.pi_star_never = BVec::Constant(1, p0);
  ctx.pi_star_always = BVec::Constant(1, p1);
  return build_weights(ctx);
}

Vec single(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_CASE("build_weights matches the hand-coded table exactly") {
  // dyadic utility values keep every arithmetic expression exact
  const std::array<UtilitySpec, 3> utilities = {UtilitySpec{1.0, 0.75, 0.0},
                                                UtilitySpec{0.75, 1.0, 0.5},
                                                UtilitySpec{1.0, 1.0, 0.25}};
  for (const auto& u : utilities) {
    for (const Comparator cmp :
         {Comparator::NeverTreat, Comparator::AlwaysTreat, Comparator::Oracle}) {
      for (int dp = 0; dp <= 1; ++dp) {
        for (int dt = 0; dt <= 1; ++dt) {
          for (int p0 = 0; p0 <= 1; ++p0) {
            for (int p1 = 0; p1 <= 1; ++p1) {
              const WeightTriple got = weights_for(cmp, u, dp, dt, p0, p1);
              const HandTriple want = hand_weights(cmp, u, dp, dt, p0, p1);
              CHECK(got.c1[0] == want.c1);
              CHECK(got.c0[0] == want.c0);
              CHECK(got.c[0] == want.c);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("build_weights: worked examples") {
  // symmetric utility collapses both delta terms
  WeightTriple w = weights_for(Comparator::NeverTreat, {1.0, 1.0, 0.0}, 0, 1, 0, 0);
  CHECK(w.c1[0] == 1.0);
  CHECK(w.c0[0] == -1.0);
  CHECK(w.c[0] == 0.0);

  w = weights_for(Comparator::NeverTreat, {1.0, 0.8, 0.0}, 0, 1, 0, 0);
  CHECK(w.c1[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w.c0[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(w.c[0] == 0.0);

  w = weights_for(Comparator::NeverTreat, {0.8, 1.0, 0.0}, 1, 0, 0, 0);
  CHECK(w.c1[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w.c0[0] == doctest::Approx(-0.8).epsilon(1e-15));
  CHECK(w.c[0] == doctest::Approx(-0.2).epsilon(1e-12));

  // oracle disagreement row
  w = weights_for(Comparator::Oracle, {1.0, 0.8, 0.0}, 0, 1, 1, 0);
  CHECK(w.c1[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(w.c0[0] == doctest::Approx(-1.8).epsilon(1e-15));
  CHECK(w.c[0] == 0.0);
}

TEST_CASE("build_weights: missing classifier raises a configuration error") {
  ComparatorContext ctx;
  ctx.comparator = Comparator::Oracle;
  ctx.utility = {1.0, 0.8, 0.0};
  ctx.delta_plus = BVec::Constant(1, 1);
  ctx.delta_tau = BVec::Constant(1, 0);
  CHECK_THROWS_AS(build_weights(ctx), ConfigError);

  ComparatorContext never;
  never.comparator = Comparator::NeverTreat;
  never.utility = {0.8, 1.0, 0.0};  // u_g < u_l needs delta_plus
  never.delta_tau = BVec::Constant(1, 1);
  CHECK_THROWS_AS(build_weights(never), ConfigError);
}

TEST_CASE("symmetric oracle: threshold on the CATE") {
  const UtilitySpec free_treatment{1.0, 1.0, 0.0};
  CHECK(symmetric_oracle(single(0.8), single(0.5), free_treatment)[0] == 1);
  CHECK(symmetric_oracle(single(0.5), single(0.5), free_treatment)[0] == 1);  // tie
  const UtilitySpec costly{1.0, 1.0, 0.1};
  CHECK(symmetric_oracle(single(0.55), single(0.5), costly)[0] == 0);
}

TEST_CASE("asymmetric oracle: varying threshold in e01") {
  // tau = 0.1, e01 = 0.2, threshold (u_l-u_g)/u_g * e01 = 0.05 -> treat
  const UtilitySpec u{0.8, 1.0, 0.0};
  CHECK(asymmetric_oracle(single(0.5), single(0.4), single(0.2), u)[0] == 1);

  // u_g = u_l reduces to the symmetric rule for any feasible e01
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double m1 = unif(rng), m0 = unif(rng);
    const BoundPair b = bounds_from_means(single(m1), single(m0));
    const double e01 = b.lower[0] + unif(rng) * (b.upper[0] - b.lower[0]);
    const UtilitySpec sym{0.9, 0.9, 0.05};
    CHECK(asymmetric_oracle(single(m1), single(m0), single(e01), sym)[0] ==
          symmetric_oracle(single(m1), single(m0), sym)[0]);
    // e01 = 0 also collapses to the symmetric rule whenever feasible
    if (b.lower[0] == 0.0) {
      const UtilitySpec asym{0.7, 1.3, 0.02};
      CHECK(asymmetric_oracle(single(m1), single(m0), single(0.0), asym)[0] ==
            symmetric_oracle(single(m1), single(m0), asym)[0]);
    }
  }

  CHECK_THROWS_AS(asymmetric_oracle(single(0.5), single(0.4), single(0.9), u), DataError);
}

TEST_CASE("corollary policies: worked examples") {
  // never-treat comparator, u_g < u_l, delta_plus = 0:
  // 0.9 >= (1/0.8) * 0.6 = 0.75
  const UtilitySpec u{0.8, 1.0, 0.0};
  const BVec dp0 = BVec::Zero(1), dt1 = BVec::Ones(1);
  CHECK(corollary_policy(Comparator::NeverTreat, u, single(0.9), single(0.6), dp0, dt1)[0] == 1);

  // always-treat comparator with u_g < u_l is the symmetric policy
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec m1(100), m0(100);
  for (int i = 0; i < 100; ++i) {
    m1[i] = unif(rng);
    m0[i] = unif(rng);
  }
  const BVec dp = delta_plus_closed_form(m1, m0);
  const BVec dt = delta_tau_closed_form(m1, m0);
  const BVec pol = corollary_policy(Comparator::AlwaysTreat, u, m1, m0, dp, dt);
  const BVec sym = symmetric_oracle(m1, m0, u);
  CHECK((pol - sym).cwiseAbs().maxCoeff() == 0);

  // oracle comparator, u_g >= u_l: delta_tau = 1 treats regardless of m
  const UtilitySpec heavy{1.0, 0.8, 0.0};
  CHECK(corollary_policy(Comparator::Oracle, heavy, single(0.01), single(0.99), BVec::Ones(1),
                         BVec::Ones(1))[0] == 1);

  CHECK_THROWS_AS(corollary_policy(Comparator::Oracle, UtilitySpec{1.0, 0.8, 0.1}, m1, m0, dp, dt),
                  ConfigError);
}

TEST_CASE("oracle sandwich: between the two constant-comparator policies") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const UtilitySpec u : {UtilitySpec{1.0, 0.7, 0.0}, UtilitySpec{0.7, 1.0, 0.0}}) {
    Vec m1(500), m0(500);
    for (int i = 0; i < 500; ++i) {
      m1[i] = unif(rng);
      m0[i] = unif(rng);
    }
    const BVec dp = delta_plus_closed_form(m1, m0);
    const BVec dt = delta_tau_closed_form(m1, m0);
    const BVec never = corollary_policy(Comparator::NeverTreat, u, m1, m0, dp, dt);
    const BVec always = corollary_policy(Comparator::AlwaysTreat, u, m1, m0, dp, dt);
    const BVec oracle = corollary_policy(Comparator::Oracle, u, m1, m0, dp, dt);
    for (int i = 0; i < 500; ++i) {
      if (never[i] == 1) CHECK(oracle[i] == 1);
      if (always[i] == 0) CHECK(oracle[i] == 0);
    }
  }
}

namespace {

struct Section5Sample {
  Mat x;
  ScoreTable scores;
  UtilitySpec utility;
};

Section5Sample section5_sample(long n, unsigned seed, double u_l) {
  DgpSpec spec;
  spec.n = n;
  spec.seed = seed;
  GeneratedSample sample = generate(spec);
  ScoreTable scores = score_ipw(sample.data, Vec::Constant(n, spec.p_treat));
  return {std::move(sample.data.x), std::move(scores), UtilitySpec{1.0, u_l, 0.0}};
}

}  // namespace

TEST_CASE("constant-comparator fit matches brute force over all thresholds") {
  const Section5Sample s = section5_sample(5000, 606, 0.833);
  const FeatureMap cls = FeatureMap::threshold1d(0);
  const MinimaxFit fit =
      fit_minimax_constant(s.x, s.scores, s.utility, cls, cls, SolverOptions{});
  CHECK(fit.comparator == Comparator::AlwaysTreat);

  // rebuild the stage-2 weights from the fitted classifier, per the displayed
  // step: c1 = u_g + d(u_l-u_g), c0 = -u_l - d(u_g-u_l), c = d(u_g-u_l) - cost
  const BVec delta = fit.delta_plus.policy.decide_all(s.x);
  WeightTriple w;
  w.c1.resize(s.x.rows());
  w.c0.resize(s.x.rows());
  w.c.resize(s.x.rows());
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    const double d = delta[i];
    w.c1[i] = s.utility.u_g + d * (s.utility.u_l - s.utility.u_g);
    w.c0[i] = -s.utility.u_l - d * (s.utility.u_g - s.utility.u_l);
    w.c[i] = d * (s.utility.u_g - s.utility.u_l) - s.utility.cost;
  }
  double brute = std::numeric_limits<double>::infinity();
  for (const BVec& decisions : enumerate_threshold_policies(s.x.col(0))) {
    brute = std::min(brute, worst_case_regret(decisions, s.scores, w));
  }
  CHECK(std::abs(fit.objective - brute) <= 1e-9);
}

TEST_CASE("symmetric utility collapses the fit to welfare maximization") {
  const Section5Sample s = section5_sample(2000, 11, 1.0);
  const FeatureMap cls = FeatureMap::threshold1d(0);
  const MinimaxFit fit =
      fit_minimax_constant(s.x, s.scores, s.utility, cls, cls, SolverOptions{});
  CHECK(fit.comparator == Comparator::NeverTreat);  // the documented default at equality

  WeightTriple sym;
  sym.c1 = Vec::Constant(s.x.rows(), 1.0);
  sym.c0 = Vec::Constant(s.x.rows(), -1.0);
  sym.c = Vec::Constant(s.x.rows(), 0.0);
  const PolicyFit ewm = minimize_weighted(s.x, s.scores, sym, cls, SolverOptions{});
  CHECK(fit.objective == doctest::Approx(ewm.objective).epsilon(1e-12));
  CHECK((fit.policy.decide_all(s.x) - ewm.policy.decide_all(s.x)).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("prohibitive cost returns the never-treat policy") {
  Section5Sample s = section5_sample(500, 29, 0.9);
  s.utility.cost = 100.0;
  const FeatureMap cls = FeatureMap::threshold1d(0);
  const MinimaxFit fit =
      fit_minimax_constant(s.x, s.scores, s.utility, cls, cls, SolverOptions{});
  CHECK(fit.policy.decide_all(s.x).sum() == 0);
}

TEST_CASE("oracle fit: regret against the infeasible oracle is non-negative") {
  const FeatureMap cls = FeatureMap::threshold1d(0);
  for (const double u_l : {0.6, 0.8, 1.0, 1.2, 1.4}) {
    DgpSpec spec;
    spec.n = 2000;
    spec.seed = 1000 + static_cast<unsigned>(u_l * 10);
    const GeneratedSample sample = generate(spec);
    const ScoreTable scores = score_ipw(sample.data, Vec::Constant(spec.n, 0.5));
    const UtilitySpec utility{1.0, u_l, 0.0};
    const OracleFit fit =
        fit_minimax_oracle(sample.data.x, scores, utility, {cls, cls, cls, cls},
                           SolverOptions{});
    const GroundTruth& truth = *sample.data.truth;
    const BVec oracle =
        asymmetric_oracle(truth.true_m1(), truth.true_m0(), truth.e01(), utility);
    const double regret =
        true_regret(fit.policy.decide_all(sample.data.x), oracle, truth, utility);
    CHECK(regret >= -1e-12);
  }
}

TEST_CASE("u_g == u_l makes the oracle fit coincide with delta_tau") {
  const Section5Sample s = section5_sample(3000, 55, 1.0);
  const FeatureMap cls = FeatureMap::threshold1d(0);
  const OracleFit fit =
      fit_minimax_oracle(s.x, s.scores, s.utility, {cls, cls, cls, cls}, SolverOptions{});
  CHECK(fit.nuisances.symmetric_side_reused_delta_tau);
  const BVec pi = fit.policy.decide_all(s.x);
  const BVec dtau = fit.nuisances.delta_tau.policy.decide_all(s.x);
  CHECK((pi - dtau).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("closed-form agreement on a monotone DGP with true means supplied") {
  // logistic means with a single crossing; scores are the true m values
  const long n = 20000;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
  Mat x(n, 1);
  Vec m1(n), m0(n);
  auto m1_of = [](double v) { return 1.0 / (1.0 + std::exp(-(1.2 * v + 0.2))); };
  auto m0_of = [](double v) { return 1.0 / (1.0 + std::exp(-(0.6 * v + 0.5))); };
  for (long i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    m1[i] = m1_of(x(i, 0));
    m0[i] = m0_of(x(i, 0));
  }
  const ScoreTable scores = ScoreTable::make(m0, m1, ScoreMethod::DR);

  const FeatureMap cls = FeatureMap::threshold1d(0);
  for (const double u_l : {0.8, 1.0, 1.25}) {
    const UtilitySpec utility{1.0, u_l, 0.0};
    const MinimaxFit fit =
        fit_minimax_constant(x, scores, utility, cls, cls, SolverOptions{});

    Mat grid(1000, 1);
    Vec gm1(1000), gm0(1000);
    for (int k = 0; k < 1000; ++k) {
      grid(k, 0) = std::sqrt(2.0) * normal_quantile((k + 0.5) / 1000.0);
      gm1[k] = m1_of(grid(k, 0));
      gm0[k] = m0_of(grid(k, 0));
    }
    const BVec truth = corollary_policy(fit.comparator, utility, gm1, gm0,
                                        delta_plus_closed_form(gm1, gm0),
                                        delta_tau_closed_form(gm1, gm0));
    const BVec fitted = fit.policy.decide_all(grid);
    double agree = 0.0;
    for (int k = 0; k < 1000; ++k) agree += fitted[k] == truth[k] ? 1.0 : 0.0;
    CHECK(agree / 1000.0 >= 0.99);
  }
}
