#include "strata/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "strata/errors.hpp"
#include "strata/evaluate.hpp"
#include "strata/minimax.hpp"
#include "strata/parallel.hpp"
#include "strata/partial_id.hpp"

namespace strata {

void DgpSpec::validate() const {
  if (n < 1) throw ConfigError("dgp sample size must be at least 1");
  if (!(p_treat > 0.0 && p_treat < 1.0)) throw ConfigError("p_treat must lie in (0,1)");
  if (!(x_sd > 0.0)) throw ConfigError("x_sd must be positive");
  if (draw_beta && !(beta_sd > 0.0)) throw ConfigError("beta_sd must be positive when drawn");
  for (const double a : alpha) {
    if (!std::isfinite(a)) throw ConfigError("non-finite alpha");
  }
}

std::array<double, 4> strata_probs(const std::array<double, 4>& alpha,
                                   const std::array<double, 4>& beta, double x) {
  std::array<double, 4> logits;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 4; ++s) {
    logits[s] = alpha[s] + x * beta[s];
    max_logit = std::max(max_logit, logits[s]);
  }
  std::array<double, 4> probs;
  double denom = 0.0;
  for (int s = 0; s < 4; ++s) {
    probs[s] = std::exp(logits[s] - max_logit);
    denom += probs[s];
  }
  for (int s = 0; s < 4; ++s) probs[s] /= denom;
  return probs;
}

GeneratedSample generate(const DgpSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::array<double, 4> beta = spec.beta;
  if (spec.draw_beta) {
    beta[kUseless] = spec.beta_sd * normal(rng);
    beta[kUseful] = spec.beta_sd * normal(rng);
    beta[kHarmful] = spec.beta_sd * normal(rng);
    beta[kHarmless] = 0.0;
  }

  const Eigen::Index n = static_cast<Eigen::Index>(spec.n);
  Dataset data;
  data.x.resize(n, 1);
  data.d.resize(n);
  data.y.resize(n);
  GroundTruth truth;
  truth.y1.resize(n);
  truth.y0.resize(n);
  Mat scores(n, 4);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = spec.x_sd * normal(rng);
    data.x(i, 0) = x;
    const std::array<double, 4> probs = strata_probs(spec.alpha, beta, x);
    for (int s = 0; s < 4; ++s) scores(i, s) = probs[s];

    const double u = unif(rng);
    int stratum = 0;
    double cum = probs[0];
    while (stratum < 3 && u >= cum) {
      ++stratum;
      cum += probs[stratum];
    }
    switch (stratum) {
      case kUseless:
        truth.y1[i] = 0;
        truth.y0[i] = 0;
        break;
      case kUseful:
        truth.y1[i] = 1;
        truth.y0[i] = 0;
        break;
      case kHarmful:
        truth.y1[i] = 0;
        truth.y0[i] = 1;
        break;
      default:
        truth.y1[i] = 1;
        truth.y0[i] = 1;
        break;
    }
    data.d[i] = unif(rng) < spec.p_treat ? 1 : 0;
    data.y[i] = data.d[i] == 1 ? truth.y1[i] : truth.y0[i];
  }

  truth.m1 = scores.col(kHarmless) + scores.col(kUseful);
  truth.m0 = scores.col(kHarmless) + scores.col(kHarmful);
  truth.principal_scores = std::move(scores);
  data.truth = std::move(truth);
  data.validate();
  return {std::move(data), beta};
}

ScoreTable compute_scores(const Dataset& data, const ScoringConfig& cfg, unsigned seed) {
  if (cfg.propensity.kind == LearnerKind::Known && cfg.method == ScoreMethod::IPW) {
    CrossFitPlan trivial;  // known-propensity IPW never touches the folds
    trivial.n_folds = std::max(cfg.folds, 2);
    trivial.fold_assignment.assign(static_cast<size_t>(data.n()), 0);
    const PropensityFit prop = fit_propensity(data, trivial, cfg.propensity, cfg.clip);
    return score_ipw(data, prop.d_hat);
  }
  const CrossFitPlan plan = make_crossfit_plan(data, cfg.folds, seed);
  const PropensityFit prop = fit_propensity(data, plan, cfg.propensity, cfg.clip);
  if (cfg.method == ScoreMethod::IPW) return score_ipw(data, prop.d_hat);
  const OutcomeFit m0 = fit_outcome(data, 0, plan, cfg.outcome);
  const OutcomeFit m1 = fit_outcome(data, 1, plan, cfg.outcome);
  return score_dr(data, prop.d_hat, m0.m_hat, m1.m_hat);
}

// Acklam's rational approximation; |error| < 1.2e-9 over (0,1).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("normal quantile needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

struct TruthCurves {
  Mat x;  // one column
  Vec m1, m0, e01;
  BVec delta_plus, delta_tau;
};

TruthCurves truth_at(const std::array<double, 4>& alpha, const std::array<double, 4>& beta,
                     const Vec& points) {
  TruthCurves t;
  t.x.resize(points.size(), 1);
  t.m1.resize(points.size());
  t.m0.resize(points.size());
  t.e01.resize(points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const std::array<double, 4> probs = strata_probs(alpha, beta, points[i]);
    t.x(i, 0) = points[i];
    t.m1[i] = probs[kHarmless] + probs[kUseful];
    t.m0[i] = probs[kHarmless] + probs[kHarmful];
    t.e01[i] = probs[kHarmful];
  }
  t.delta_plus = delta_plus_closed_form(t.m1, t.m0);
  t.delta_tau = delta_tau_closed_form(t.m1, t.m0);
  return t;
}

double misclass_rate(const BVec& fitted, const BVec& truth) {
  double miss = 0.0;
  for (Eigen::Index i = 0; i < fitted.size(); ++i) miss += fitted[i] != truth[i] ? 1.0 : 0.0;
  return miss / static_cast<double>(fitted.size());
}

// Regret of pi against the e01-aware oracle, on an equal-weight point set
// with known truth; non-negative by construction.
double oracle_regret(const BVec& pi, const TruthCurves& t, const UtilitySpec& utility) {
  const BVec oracle = asymmetric_oracle(t.m1, t.m0, t.e01, utility);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    const double b = utility.u_g * (t.m1[i] - t.m0[i]) +
                     (utility.u_g - utility.u_l) * t.e01[i] - utility.cost;
    sum += (static_cast<double>(oracle[i]) - static_cast<double>(pi[i])) * b;
  }
  return sum / static_cast<double>(pi.size());
}

}  // namespace

ReplicationReport replicate(const ReplicateConfig& cfg) {
  cfg.dgp.validate();
  if (cfg.n_grid.empty() || cfg.u_l_grid.empty()) {
    throw ConfigError("replication grids must be non-empty");
  }
  if (cfg.reps < 1) throw ConfigError("need at least one replication");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const long n_tasks = static_cast<long>(cfg.n_grid.size()) * cfg.reps;
  std::vector<std::vector<ReplicationRow>> task_rows(static_cast<size_t>(n_tasks));
  std::vector<std::string> task_errors(static_cast<size_t>(n_tasks));

  Vec grid_points(cfg.eval_grid_points);
  for (long k = 0; k < cfg.eval_grid_points; ++k) {
    const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(cfg.eval_grid_points);
    grid_points[k] = cfg.dgp.x_sd * normal_quantile(q);
  }

  parallel_for(n_tasks, cfg.workers, [&](long task) {
    const size_t size_idx = static_cast<size_t>(task) / static_cast<size_t>(cfg.reps);
    const int rep = static_cast<int>(task % cfg.reps);
    const long n = cfg.n_grid[size_idx];
    auto& rows = task_rows[static_cast<size_t>(task)];
    try {
      DgpSpec dgp = cfg.dgp;
      dgp.n = n;
      dgp.seed = derive_seed(cfg.dgp.seed, static_cast<std::uint64_t>(task));
      const GeneratedSample sample = generate(dgp);
      const Dataset& data = sample.data;

      ScoringConfig scoring = cfg.scoring;
      if (cfg.known_propensity) scoring.propensity = LearnerSpec::known(dgp.p_treat);
      const ScoreTable scores =
          compute_scores(data, scoring, static_cast<unsigned>(dgp.seed & 0xffffffffu));

      const TruthCurves grid = truth_at(dgp.alpha, sample.beta_used, grid_points);
      const TruthCurves insample = truth_at(dgp.alpha, sample.beta_used, data.x.col(0));

      const FeatureMap cls = FeatureMap::threshold1d(0);
      SolverOptions solver;  // exact direct search
      const PolicyFit dplus = fit_delta_plus(data.x, scores, cls, solver);
      const PolicyFit dtau = fit_delta_tau(data.x, scores, cls, solver);

      auto push = [&](const std::string& metric, double u_l, double value) {
        rows.push_back({n, rep, u_l, metric, value});
      };
      push("misclass_delta_plus_grid", nan,
           misclass_rate(dplus.policy.decide_all(grid.x), grid.delta_plus));
      push("misclass_delta_plus_insample", nan,
           misclass_rate(dplus.policy.decide_all(insample.x), insample.delta_plus));
      push("misclass_delta_tau_grid", nan,
           misclass_rate(dtau.policy.decide_all(grid.x), grid.delta_tau));
      push("misclass_delta_tau_insample", nan,
           misclass_rate(dtau.policy.decide_all(insample.x), insample.delta_tau));

      for (const double u_l : cfg.u_l_grid) {
        const UtilitySpec utility{cfg.u_g, u_l, cfg.cost};
        OracleClasses classes{cls, cls, cls, cls};
        const OracleFit fit = fit_minimax_oracle(data.x, scores, utility, classes, solver);

        const Comparator side =
            utility.u_g > utility.u_l ? Comparator::AlwaysTreat : Comparator::NeverTreat;
        const LinearPolicy& side_policy = side == Comparator::AlwaysTreat
                                              ? fit.nuisances.pi_always
                                              : fit.nuisances.pi_never;
        const BVec side_truth_grid = corollary_policy(side, utility, grid.m1, grid.m0,
                                                      grid.delta_plus, grid.delta_tau);
        push("misclass_pi_constant_grid", u_l,
             misclass_rate(side_policy.decide_all(grid.x), side_truth_grid));

        if (utility.cost == 0.0) {
          const BVec oracle_truth_grid = corollary_policy(
              Comparator::Oracle, utility, grid.m1, grid.m0, grid.delta_plus, grid.delta_tau);
          push("misclass_pi_oracle_grid", u_l,
               misclass_rate(fit.policy.decide_all(grid.x), oracle_truth_grid));
        }
        push("regret_oracle_grid", u_l,
             oracle_regret(fit.policy.decide_all(grid.x), grid, utility));
        push("regret_oracle_insample", u_l,
             oracle_regret(fit.policy.decide_all(insample.x), insample, utility));
      }
    } catch (const std::exception& e) {
      rows.clear();
      task_errors[static_cast<size_t>(task)] = e.what();
    }
  });

  ReplicationReport report;
  for (size_t t = 0; t < task_rows.size(); ++t) {
    if (!task_errors[t].empty()) {
      ++report.failures;
      if (report.failure_messages.size() < 10) {
        report.failure_messages.push_back(task_errors[t]);
      }
      continue;
    }
    for (auto& row : task_rows[t]) report.rows.push_back(std::move(row));
  }

  // aggregate mean and standard error per (n, u_l, metric)
  struct Key {
    long n;
    double u_l;
    std::string metric;
    bool operator<(const Key& o) const {
      if (n != o.n) return n < o.n;
      const bool a_nan = std::isnan(u_l), b_nan = std::isnan(o.u_l);
      if (a_nan != b_nan) return a_nan;
      if (!a_nan && u_l != o.u_l) return u_l < o.u_l;
      return metric < o.metric;
    }
  };
  std::map<Key, std::vector<double>> buckets;
  for (const auto& row : report.rows) {
    buckets[{row.n, row.u_l, row.metric}].push_back(row.value);
  }
  for (const auto& [key, values] : buckets) {
    MetricSummary s;
    s.n = key.n;
    s.u_l = key.u_l;
    s.metric = key.metric;
    s.count = static_cast<long>(values.size());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    s.mean = mean;
    s.se = values.size() > 1
               ? std::sqrt(var / (static_cast<double>(values.size()) - 1.0) /
                           static_cast<double>(values.size()))
               : 0.0;
    report.summary.push_back(std::move(s));
  }
  return report;
}

}  // namespace strata
