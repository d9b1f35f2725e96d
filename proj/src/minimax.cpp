#include "strata/minimax.hpp"

#include <cmath>

#include "strata/partial_id.hpp"

namespace strata {

namespace {

struct Triple {
  double c1, c0, c;
};

// L_b decomposition: the delta_tau-indexed row of Theorem 1.
Triple tau_row(const UtilitySpec& u, int delta_tau) {
  const double d = static_cast<double>(delta_tau);
  return {u.u_l + (u.u_g - u.u_l) * d, -u.u_l - (u.u_g - u.u_l) * d, -u.cost};
}

// U_b decomposition: the delta_plus-indexed row of Theorem 1.
Triple plus_row(const UtilitySpec& u, int delta_plus) {
  const double d = static_cast<double>(delta_plus);
  return {u.u_g + d * (u.u_l - u.u_g), -u.u_l - d * (u.u_g - u.u_l),
          d * (u.u_g - u.u_l) - u.cost};
}

Triple sum_rows(const Triple& a, const Triple& b) {
  return {a.c1 + b.c1, a.c0 + b.c0, a.c + b.c};
}

}  // namespace

void ComparatorContext::validate() const {
  utility.validate();
  switch (comparator) {
    case Comparator::NeverTreat:
      if (utility.u_g >= utility.u_l) {
        if (delta_tau.size() == 0)
          throw ConfigError("never-treat weights with u_g >= u_l need delta_tau");
      } else if (delta_plus.size() == 0) {
        throw ConfigError("never-treat weights with u_g < u_l need delta_plus");
      }
      return;
    case Comparator::AlwaysTreat:
      if (utility.u_g >= utility.u_l) {
        if (delta_plus.size() == 0)
          throw ConfigError("always-treat weights with u_g >= u_l need delta_plus");
      } else if (delta_tau.size() == 0) {
        throw ConfigError("always-treat weights with u_g < u_l need delta_tau");
      }
      return;
    case Comparator::Oracle: {
      if (delta_tau.size() == 0 || delta_plus.size() == 0) {
        throw ConfigError("oracle weights need both delta_tau and delta_plus");
      }
      if (!pi_star_never || !pi_star_always) {
        throw ConfigError(
            "oracle weights need the never-treat and always-treat minimax policies");
      }
      const Eigen::Index n = delta_tau.size();
      if (delta_plus.size() != n || pi_star_never->size() != n || pi_star_always->size() != n) {
        throw ConfigError("oracle weight inputs have mismatched lengths");
      }
      return;
    }
  }
}

WeightTriple build_weights(const ComparatorContext& ctx) {
  ctx.validate();
  const UtilitySpec& u = ctx.utility;
  const bool gain_heavy = u.u_g >= u.u_l;

  WeightTriple out;
  out.comparator = ctx.comparator;

  if (ctx.comparator == Comparator::NeverTreat || ctx.comparator == Comparator::AlwaysTreat) {
    // never-treat pairs with the tau row when u_g >= u_l and with the plus
    // row otherwise; always-treat mirrors it
    const bool use_tau = (ctx.comparator == Comparator::NeverTreat) == gain_heavy;
    const BVec& delta = use_tau ? ctx.delta_tau : ctx.delta_plus;
    const Eigen::Index n = delta.size();
    out.c1.resize(n);
    out.c0.resize(n);
    out.c.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Triple t = use_tau ? tau_row(u, delta[i]) : plus_row(u, delta[i]);
      out.c1[i] = t.c1;
      out.c0[i] = t.c0;
      out.c[i] = t.c;
    }
    out.validate();
    return out;
  }

  // oracle comparator: dispatch per unit on the two constant-comparator
  // policies; agreement picks L_b (both 0) or U_b (both 1), disagreement
  // takes their sum, matching w = pi0 U_b + (1-pi1) L_b + (1-pi0) pi1 (U_b+L_b)
  const BVec& pi0 = *ctx.pi_star_never;
  const BVec& pi1 = *ctx.pi_star_always;
  const Eigen::Index n = ctx.delta_tau.size();
  out.c1.resize(n);
  out.c0.resize(n);
  out.c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Triple lb = gain_heavy ? tau_row(u, ctx.delta_tau[i]) : plus_row(u, ctx.delta_plus[i]);
    const Triple ub = gain_heavy ? plus_row(u, ctx.delta_plus[i]) : tau_row(u, ctx.delta_tau[i]);
    Triple t;
    if (pi0[i] == pi1[i]) {
      t = pi0[i] == 1 ? ub : lb;
    } else {
      t = sum_rows(ub, lb);
    }
    out.c1[i] = t.c1;
    out.c0[i] = t.c0;
    out.c[i] = t.c;
  }
  out.validate();
  return out;
}

BVec symmetric_oracle(const Vec& m1, const Vec& m0, const UtilitySpec& utility) {
  utility.validate();
  if (m1.size() != m0.size()) throw DataError("m1/m0 length mismatch");
  BVec out(m1.size());
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    out[i] = utility.u_g * (m1[i] - m0[i]) >= utility.cost ? 1 : 0;
  }
  return out;
}

BVec asymmetric_oracle(const Vec& m1, const Vec& m0, const Vec& e01, const UtilitySpec& utility) {
  utility.validate();
  if (m1.size() != m0.size() || e01.size() != m1.size()) {
    throw DataError("m1/m0/e01 length mismatch");
  }
  const BoundPair bounds = bounds_from_means(m1, m0);
  BVec out(m1.size());
  for (Eigen::Index i = 0; i < m1.size(); ++i) {
    if (e01[i] < bounds.lower[i] - 1e-9 || e01[i] > bounds.upper[i] + 1e-9) {
      throw DataError("e01 outside its identification bounds at row " + std::to_string(i));
    }
    const double tau = m1[i] - m0[i];
    const double threshold =
        (utility.u_l - utility.u_g) / utility.u_g * e01[i] + utility.cost / utility.u_g;
    out[i] = tau >= threshold ? 1 : 0;
  }
  return out;
}

BVec corollary_policy(Comparator comparator, const UtilitySpec& utility, const Vec& m1,
                      const Vec& m0, const BVec& delta_plus, const BVec& delta_tau) {
  utility.validate();
  const Eigen::Index n = m1.size();
  if (m0.size() != n) throw DataError("m1/m0 length mismatch");
  const double ug = utility.u_g;
  const double ul = utility.u_l;
  const double c = utility.cost;

  // asymmetric-side rule shared by Corollary 1 (u_g < u_l) and Corollary 2
  // (u_g >= u_l); the delta_plus = 0 row carries the cost term implied by
  // Theorem 1's U_b algebra
  auto plus_side = [&](Eigen::Index i) -> int {
    if (delta_plus[i] == 0) {
      return m1[i] >= (ul / ug) * m0[i] + c / ug ? 1 : 0;
    }
    return m1[i] >= (ug / ul) * m0[i] + (ul - ug + c) / ul ? 1 : 0;
  };
  auto symmetric_side = [&](Eigen::Index i) -> int {
    return m1[i] - m0[i] >= c / ug ? 1 : 0;
  };

  BVec out(n);
  switch (comparator) {
    case Comparator::NeverTreat:
      for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = ug >= ul ? symmetric_side(i) : plus_side(i);
      }
      return out;
    case Comparator::AlwaysTreat:
      for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = ug >= ul ? plus_side(i) : symmetric_side(i);
      }
      return out;
    case Comparator::Oracle: {
      if (c != 0.0) {
        throw ConfigError(
            "the closed-form oracle policy requires cost == 0; fit the empirical "
            "minimax-vs-oracle policy for non-zero costs");
      }
      if (delta_tau.size() != n || delta_plus.size() != n) {
        throw DataError("classifier vectors do not match m1/m0");
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (ug >= ul) {
          if (delta_tau[i] == 1) {
            out[i] = 1;
          } else if (plus_side(i) == 0) {  // pi*_always(x) = 0
            out[i] = 0;
          } else if (delta_plus[i] == 0) {
            out[i] = m1[i] >= (2.0 * ul / (ug + ul)) * m0[i] ? 1 : 0;
          } else {
            out[i] = m1[i] >= ((ug + ul) / (2.0 * ul)) * m0[i] + (ul - ug) / (2.0 * ul) ? 1 : 0;
          }
        } else {
          if (plus_side(i) == 1) {  // pi*_never(x) = 1
            out[i] = 1;
          } else if (delta_tau[i] == 0) {
            out[i] = 0;
          } else if (delta_plus[i] == 0) {
            out[i] = m1[i] >= ((ug + ul) / (2.0 * ug)) * m0[i] ? 1 : 0;
          } else {
            out[i] = m1[i] >= (2.0 * ug / (ug + ul)) * m0[i] + (ul - ug) / (ug + ul) ? 1 : 0;
          }
        }
      }
      return out;
    }
  }
  throw ConfigError("unknown comparator");
}

namespace {

MinimaxFit fit_constant_impl(const Mat& x, const ScoreTable& scores, const UtilitySpec& utility,
                             const FeatureMap& pi_class, const SolverOptions& solver,
                             PolicyFit delta_plus_fit) {
  MinimaxFit fit;
  fit.comparator = utility.u_g > utility.u_l ? Comparator::AlwaysTreat : Comparator::NeverTreat;
  fit.delta_plus = std::move(delta_plus_fit);

  const BVec delta = fit.delta_plus.policy.decide_all(x);
  ComparatorContext ctx;
  ctx.comparator = fit.comparator;
  ctx.utility = utility;
  ctx.delta_plus = delta;
  // at u_g == u_l the never-treat branch reads delta_tau, whose coefficient
  // is zero there; feeding the delta_plus decisions keeps the context valid
  ctx.delta_tau = delta;
  const WeightTriple weights = build_weights(ctx);

  PolicyFit pi_fit;
  try {
    pi_fit = minimize_weighted(x, scores, weights, pi_class, solver);
  } catch (const SolverError& e) {
    throw SolverError(std::string("constant-comparator policy stage: ") + e.what());
  }
  fit.policy = pi_fit.policy;
  fit.objective = pi_fit.objective;
  fit.diagnostics = pi_fit.diagnostics;
  return fit;
}

}  // namespace

MinimaxFit fit_minimax_constant(const Mat& x, const ScoreTable& scores,
                                const UtilitySpec& utility, const FeatureMap& pi_class,
                                const FeatureMap& delta_class, const SolverOptions& solver) {
  utility.validate();
  PolicyFit delta_fit;
  try {
    delta_fit = fit_delta_plus(x, scores, delta_class, solver);
  } catch (const SolverError& e) {
    throw SolverError(std::string("delta_plus stage: ") + e.what());
  }
  return fit_constant_impl(x, scores, utility, pi_class, solver, std::move(delta_fit));
}

OracleFit fit_minimax_oracle(const Mat& x, const ScoreTable& scores, const UtilitySpec& utility,
                             const OracleClasses& classes, const SolverOptions& solver) {
  utility.validate();
  OracleFit fit;

  try {
    fit.nuisances.delta_plus = fit_delta_plus(x, scores, classes.delta_plus, solver);
  } catch (const SolverError& e) {
    throw SolverError(std::string("delta_plus stage: ") + e.what());
  }
  try {
    fit.nuisances.delta_tau = fit_delta_tau(x, scores, classes.delta_tau, solver);
  } catch (const SolverError& e) {
    throw SolverError(std::string("delta_tau stage: ") + e.what());
  }

  // the utility-asymmetric side comes from the constant-comparator fit; the
  // symmetric side is delta_tau when cost = 0 and a direct symmetric-objective
  // fit otherwise
  const MinimaxFit side = fit_constant_impl(x, scores, utility, classes.pi_prime, solver,
                                            fit.nuisances.delta_plus);
  LinearPolicy symmetric_policy;
  if (utility.cost == 0.0) {
    symmetric_policy = fit.nuisances.delta_tau.policy;
    fit.nuisances.symmetric_side_reused_delta_tau = true;
  } else {
    WeightTriple sym;
    sym.comparator = utility.u_g > utility.u_l ? Comparator::NeverTreat : Comparator::AlwaysTreat;
    sym.c1 = Vec::Constant(x.rows(), utility.u_g);
    sym.c0 = Vec::Constant(x.rows(), -utility.u_g);
    sym.c = Vec::Constant(x.rows(), -utility.cost);
    try {
      symmetric_policy = minimize_weighted(x, scores, sym, classes.pi_prime, solver).policy;
    } catch (const SolverError& e) {
      throw SolverError(std::string("symmetric-side policy stage: ") + e.what());
    }
  }

  if (side.comparator == Comparator::AlwaysTreat) {
    fit.nuisances.pi_always = side.policy;
    fit.nuisances.pi_never = symmetric_policy;
  } else {
    fit.nuisances.pi_never = side.policy;
    fit.nuisances.pi_always = symmetric_policy;
  }

  ComparatorContext ctx;
  ctx.comparator = Comparator::Oracle;
  ctx.utility = utility;
  ctx.delta_tau = fit.nuisances.delta_tau.policy.decide_all(x);
  ctx.delta_plus = fit.nuisances.delta_plus.policy.decide_all(x);
  ctx.pi_star_never = fit.nuisances.pi_never.decide_all(x);
  ctx.pi_star_always = fit.nuisances.pi_always.decide_all(x);
  fit.weights = build_weights(ctx);

  PolicyFit pi_fit;
  try {
    pi_fit = minimize_weighted(x, scores, fit.weights, classes.pi, solver);
  } catch (const SolverError& e) {
    throw SolverError(std::string("oracle policy stage: ") + e.what());
  }
  fit.policy = pi_fit.policy;
  fit.objective = pi_fit.objective;
  fit.diagnostics = pi_fit.diagnostics;
  return fit;
}

}  // namespace strata
