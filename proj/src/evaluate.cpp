#include "strata/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "strata/parallel.hpp"
#include "strata/partial_id.hpp"

namespace strata {

namespace {

std::string compact_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// u(1; y1, y0) - u(0; y1, y0) per stratum, Table-1 parameterization.
double treatment_gain(int stratum, const UtilitySpec& u) {
  switch (stratum) {
    case kUseful:
      return u.u_g - u.cost;
    case kHarmful:
      return -u.u_l - u.cost;
    default:
      return -u.cost;
  }
}

}  // namespace

double policy_value(const BVec& pi, const GroundTruth& truth, const UtilitySpec& utility) {
  utility.validate();
  if (!truth.has_scores()) throw DataError("policy value needs principal scores in the truth");
  const Mat& e = *truth.principal_scores;
  if (pi.size() != e.rows()) throw DataError("policy decisions do not match the truth");
  double total = 0.0;
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    const double p = static_cast<double>(pi[i]);
    for (int s = 0; s < 4; ++s) {
      // baseline u(0; y1, y0) = y0
      const double base = (s == kHarmful || s == kHarmless) ? 1.0 : 0.0;
      const double treated = base + treatment_gain(s, utility);
      total += e(i, s) * (base * (1.0 - p) + treated * p);
    }
  }
  return total / static_cast<double>(e.rows());
}

double true_regret(const BVec& pi, const BVec& varpi, const GroundTruth& truth,
                   const UtilitySpec& utility) {
  utility.validate();
  if (!truth.has_scores()) throw DataError("true regret needs principal scores in the truth");
  const Vec m1 = truth.true_m1();
  const Vec m0 = truth.true_m0();
  const Vec e01 = truth.e01();
  if (pi.size() != m1.size() || varpi.size() != m1.size()) {
    throw DataError("policy decisions do not match the truth");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    const double b = utility.u_g * (m1[i] - m0[i]) + (utility.u_g - utility.u_l) * e01[i] -
                     utility.cost;
    total += (static_cast<double>(varpi[i]) - static_cast<double>(pi[i])) * b;
  }
  return total / static_cast<double>(m1.size());
}

double worst_case_regret(const BVec& pi, const ScoreTable& scores, const WeightTriple& weights) {
  if (pi.size() != scores.n() || weights.n() != scores.n()) {
    throw DataError("worst-case regret inputs are not aligned");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] != 1) continue;
    total += weights.c1[i] * scores.gamma1[i] + weights.c0[i] * scores.gamma0[i] + weights.c[i];
  }
  return -total / static_cast<double>(pi.size());
}

double worst_case_regret_population(const BVec& pi, const Vec& m1, const Vec& m0,
                                    const WeightTriple& weights) {
  if (pi.size() != m1.size() || m0.size() != m1.size() || weights.n() != m1.size()) {
    throw DataError("worst-case regret inputs are not aligned");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] != 1) continue;
    total += weights.c1[i] * m1[i] + weights.c0[i] * m0[i] + weights.c[i];
  }
  return -total / static_cast<double>(pi.size());
}

double worst_case_constant(const ComparatorContext& ctx, const Vec& m1, const Vec& m0) {
  ctx.validate();
  if (ctx.comparator == Comparator::NeverTreat) return 0.0;

  // U_b(x) is the always-treat weight row evaluated at the true means
  ComparatorContext always = ctx;
  always.comparator = Comparator::AlwaysTreat;
  const WeightTriple ub = build_weights(always);
  if (ub.n() != m1.size() || m0.size() != m1.size()) {
    throw DataError("constant computation inputs are not aligned");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    const double u_b = ub.c1[i] * m1[i] + ub.c0[i] * m0[i] + ub.c[i];
    if (ctx.comparator == Comparator::AlwaysTreat) {
      total += u_b;
    } else {
      const int reachable = std::max((*ctx.pi_star_never)[i], (*ctx.pi_star_always)[i]);
      total += static_cast<double>(reachable) * u_b;
    }
  }
  return total / static_cast<double>(m1.size());
}

RegretBoundReport check_regret_bound(const BVec& pi_hat, const BVec& pi_star,
                                     const ScoreTable& scores, const WeightTriple& true_weights,
                                     const WeightTriple& est_weights, const Vec& m1, const Vec& m0,
                                     const std::vector<BVec>& policy_class_decisions,
                                     const UtilitySpec& utility, double delta_plus_misclass) {
  const Eigen::Index n = scores.n();
  if (true_weights.n() != n || est_weights.n() != n || m1.size() != n || m0.size() != n) {
    throw DataError("regret bound inputs are not aligned");
  }
  RegretBoundReport report;
  report.excess_regret = worst_case_regret_population(pi_hat, m1, m0, true_weights) -
                         worst_case_regret_population(pi_star, m1, m0, true_weights);

  for (const BVec& decisions : policy_class_decisions) {
    const double gap = std::abs(worst_case_regret_population(decisions, m1, m0, true_weights) -
                                worst_case_regret(decisions, scores, true_weights));
    report.sup_term = std::max(report.sup_term, gap);
  }

  double c_err = 0.0, cw_err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    c_err += std::abs(est_weights.c[i] - true_weights.c[i]);
    cw_err += std::abs(est_weights.c1[i] - true_weights.c1[i]) +
              std::abs(est_weights.c0[i] - true_weights.c0[i]);
  }
  report.weight_term = c_err / static_cast<double>(n) +
                       scores.xi * cw_err / static_cast<double>(n);
  report.rhs = report.sup_term + report.weight_term;
  report.slack = report.rhs - report.excess_regret;
  report.holds = report.excess_regret <= report.rhs + 1e-12;

  report.delta_plus_misclass = delta_plus_misclass;
  report.corollary_applicable =
      true_weights.comparator == Comparator::NeverTreat && utility.u_g < utility.u_l;
  if (report.corollary_applicable) {
    report.corollary_term =
        3.0 * scores.xi * (utility.u_l - utility.u_g) * delta_plus_misclass;
    report.corollary_rhs = report.sup_term + report.corollary_term;
    report.corollary_slack = report.corollary_rhs - report.excess_regret;
    report.corollary_holds = report.excess_regret <= report.corollary_rhs + 1e-12;
  }
  return report;
}

std::vector<BVec> enumerate_threshold_policies(const Vec& column) {
  const Eigen::Index n = column.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return column[a] < column[b]; });

  std::vector<BVec> out;
  BVec above = BVec::Ones(n);
  out.push_back(above);                // cut below everything, treat-above
  out.push_back(BVec::Zero(n));        // same cut, treat-below
  for (size_t k = 0; k < order.size(); ++k) {
    above[order[k]] = 0;
    if (k + 1 < order.size() && column[order[k + 1]] == column[order[k]]) continue;
    out.push_back(above);
    out.push_back(BVec::Ones(n) - above);
  }
  return out;
}

FrontierResult frontier_sweep(const Mat& x, const ScoreTable& scores, const FrontierConfig& cfg) {
  if (cfg.u_l_grid.empty()) throw ConfigError("frontier sweep needs a non-empty u_l grid");
  FrontierResult result;

  SolverOptions solver = cfg.solver;
  const PolicyFit dplus = fit_delta_plus(x, scores, cfg.nuisance_class, solver);
  result.delta_plus = dplus.policy.decide_all(x);

  auto evaluate_point = [&](const BVec& decisions, FrontierPoint& point) {
    const ErrorRateBounds rates =
        worst_case_error_rates(decisions, scores.gamma1, scores.gamma0, result.delta_plus);
    point.fp_sup = rates.fp_sup;
    point.fn_sup = rates.fn_sup;
    double treated = 0.0, outcome = 0.0;
    for (Eigen::Index i = 0; i < decisions.size(); ++i) {
      treated += decisions[i];
      outcome += decisions[i] == 1 ? scores.gamma1[i] : scores.gamma0[i];
    }
    point.treated_fraction = treated / static_cast<double>(decisions.size());
    point.expected_outcome = outcome / static_cast<double>(decisions.size());
  };

  const double nan = std::numeric_limits<double>::quiet_NaN();
  FrontierPoint never;
  never.label = "never";
  never.u_l = nan;
  never.policy = LinearPolicy::treat_none();
  evaluate_point(BVec::Zero(x.rows()), never);
  result.points.push_back(never);

  FrontierPoint always;
  always.label = "always";
  always.u_l = nan;
  always.policy = LinearPolicy::treat_all();
  evaluate_point(BVec::Ones(x.rows()), always);
  result.points.push_back(always);

  std::vector<FrontierPoint> swept(cfg.u_l_grid.size());
  parallel_for(static_cast<long>(cfg.u_l_grid.size()), cfg.workers, [&](long k) {
    const double u_l = cfg.u_l_grid[static_cast<size_t>(k)];
    FrontierPoint& point = swept[static_cast<size_t>(k)];
    point.u_l = u_l;
    point.label = "u_l=" + compact_label(u_l);
    point.symmetric = u_l == cfg.u_g;
    try {
      const UtilitySpec utility{cfg.u_g, u_l, cfg.cost};
      if (cfg.oracle_comparator) {
        OracleClasses classes{cfg.pi_class, cfg.pi_class, cfg.nuisance_class,
                              cfg.nuisance_class};
        const OracleFit fit = fit_minimax_oracle(x, scores, utility, classes, solver);
        point.policy = fit.policy;
        point.comparator = Comparator::Oracle;
      } else {
        const MinimaxFit fit = fit_minimax_constant(x, scores, utility, cfg.pi_class,
                                                    cfg.nuisance_class, solver);
        point.policy = fit.policy;
        point.comparator = fit.comparator;
      }
      evaluate_point(point.policy.decide_all(x), point);
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
    }
  });
  for (auto& point : swept) result.points.push_back(std::move(point));
  return result;
}

std::vector<std::pair<double, double>> convex_lower_envelope(
    std::vector<std::pair<double, double>> points) {
  std::sort(points.begin(), points.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : points) {
    if (!hull.empty() && hull.back().first == p.first) {
      if (p.second >= hull.back().second) continue;
      hull.pop_back();
    }
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.first - a.first) * (p.second - a.second) -
                           (b.second - a.second) * (p.first - a.first);
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  return hull;
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw DataError("spearman correlation needs two equal-length series");
  }
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    size_t k = 0;
    while (k < n) {
      size_t j = k;
      while (j + 1 < n && v[order[j + 1]] == v[order[k]]) ++j;
      const double avg = 0.5 * (static_cast<double>(k) + static_cast<double>(j)) + 1.0;
      for (size_t t = k; t <= j; ++t) r[order[t]] = avg;
      k = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace strata
