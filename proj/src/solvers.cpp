#include "strata/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "strata/errors.hpp"

namespace strata {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void WeightedClassificationProblem::validate() const {
  if (features.rows() != weights.size() || pseudo_labels.size() != weights.size()) {
    throw DataError("weighted classification problem length mismatch");
  }
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (pseudo_labels[i] != 1 && pseudo_labels[i] != -1) {
      throw DataError("pseudo labels must be -1 or +1");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw DataError("classification weights must be finite and non-negative");
    }
  }
}

WeightedClassificationProblem build_problem(const Mat& x, const ScoreTable& scores,
                                            const WeightTriple& weights,
                                            const FeatureMap& feature_map) {
  if (scores.n() != x.rows() || weights.n() != x.rows()) {
    throw DataError("scores/weights do not align with covariate rows");
  }
  WeightedClassificationProblem p;
  p.features = feature_map.apply_all(x);
  p.pseudo_labels.resize(x.rows());
  p.weights.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double g =
        weights.c1[i] * scores.gamma1[i] + weights.c0[i] * scores.gamma0[i] + weights.c[i];
    p.pseudo_labels[i] = g >= 0.0 ? 1 : -1;
    p.weights[i] = std::abs(g);
  }
  p.validate();
  return p;
}

double problem_objective(const WeightedClassificationProblem& problem, const BVec& decisions) {
  if (decisions.size() != problem.n()) throw DataError("decision vector length mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < problem.n(); ++i) {
    if (decisions[i] == 1) sum += problem.pseudo_labels[i] * problem.weights[i];
  }
  return -sum / static_cast<double>(problem.n());
}

PolicyFit solve_exact_1d(const WeightedClassificationProblem& problem, int column) {
  problem.validate();
  const Eigen::Index n = problem.n();
  if (column < 0 || column >= problem.features.cols()) {
    throw DataError("exact search column out of range");
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return problem.features(a, column) < problem.features(b, column);
  });

  // collapse to unique values with grouped gain sums
  std::vector<double> uniq;
  std::vector<double> group_sum;
  std::vector<Eigen::Index> group_count;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = order[static_cast<size_t>(k)];
    const double v = problem.features(i, column);
    const double g = problem.pseudo_labels[i] * problem.weights[i];
    if (uniq.empty() || v != uniq.back()) {
      uniq.push_back(v);
      group_sum.push_back(g);
      group_count.push_back(1);
    } else {
      group_sum.back() += g;
      ++group_count.back();
    }
  }
  const size_t m = uniq.size();
  std::vector<double> prefix_sum(m + 1, 0.0);
  std::vector<Eigen::Index> prefix_count(m + 1, 0);
  for (size_t k = 0; k < m; ++k) {
    prefix_sum[k + 1] = prefix_sum[k] + group_sum[k];
    prefix_count[k + 1] = prefix_count[k] + group_count[k];
  }
  const double total = prefix_sum[m];

  struct Candidate {
    double treated_sum = -kInf;
    Eigen::Index treated = 0;
    double threshold = 0.0;
    int orient = 1;
  };
  Candidate best;
  auto consider = [&](double sum, Eigen::Index count, double threshold, int orient) {
    const bool better =
        sum > best.treated_sum ||
        (sum == best.treated_sum &&
         (count < best.treated ||
          (count == best.treated &&
           (threshold < best.threshold ||
            (threshold == best.threshold && orient > best.orient)))));
    if (better) best = {sum, count, threshold, orient};
  };

  // cut after k groups; treat-above takes the right part, treat-below the left
  for (size_t k = 0; k <= m; ++k) {
    double t;
    if (k == 0) {
      t = -kInf;
    } else if (k == m) {
      t = kInf;
    } else {
      t = 0.5 * (uniq[k - 1] + uniq[k]);
    }
    consider(total - prefix_sum[k], n - prefix_count[k], t, +1);
    consider(prefix_sum[k], prefix_count[k], t, -1);
  }

  PolicyFit fit;
  fit.policy.feature_map = FeatureMap::threshold1d(column);
  fit.policy.beta = Vec::Constant(1, static_cast<double>(best.orient));
  fit.policy.beta0 = -static_cast<double>(best.orient) * best.threshold;
  fit.objective = -best.treated_sum / static_cast<double>(n);
  fit.diagnostics.solver = "exact1d";
  fit.diagnostics.iterations = static_cast<long>(2 * (m + 1));
  fit.diagnostics.objective = fit.objective;
  return fit;
}

namespace {

struct KktState {
  double lower = -kInf;  // max over I_up of (y_i - u_i)
  double upper = kInf;   // min over I_low of (y_i - u_i)
  Eigen::Index arg_lower = -1;
  Eigen::Index arg_upper = -1;
};

bool at_zero(double alpha, double cap) { return alpha <= 1e-12 * std::max(1.0, cap); }
bool at_cap(double alpha, double cap) { return cap - alpha <= 1e-12 * std::max(1.0, cap); }

KktState kkt_bounds(const BVec& y, const Vec& alpha, const Vec& cap, const Vec& u) {
  KktState s;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (cap[i] <= 0.0) continue;
    const double v = static_cast<double>(y[i]) - u[i];
    const bool in_up = (y[i] == 1 && !at_cap(alpha[i], cap[i])) ||
                       (y[i] == -1 && !at_zero(alpha[i], cap[i]));
    const bool in_low = (y[i] == 1 && !at_zero(alpha[i], cap[i])) ||
                        (y[i] == -1 && !at_cap(alpha[i], cap[i]));
    if (in_up && v > s.lower) {
      s.lower = v;
      s.arg_lower = i;
    }
    if (in_low && v < s.upper) {
      s.upper = v;
      s.arg_upper = i;
    }
  }
  return s;
}

double kkt_residual_at(const BVec& y, const Vec& alpha, const Vec& cap, const Vec& u, double b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (cap[i] <= 0.0) continue;
    const double margin = static_cast<double>(y[i]) * (u[i] + b);
    double viol = 0.0;
    if (at_zero(alpha[i], cap[i])) {
      viol = std::max(0.0, 1.0 - margin);
    } else if (at_cap(alpha[i], cap[i])) {
      viol = std::max(0.0, margin - 1.0);
    } else {
      viol = std::abs(margin - 1.0);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

double dual_objective(const BVec& y, const Vec& alpha, const Vec& u) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    obj += 0.5 * alpha[i] * static_cast<double>(y[i]) * u[i] - alpha[i];
  }
  return obj;
}

}  // namespace

SvmSolution solve_svm(const WeightedClassificationProblem& problem, double C_reg,
                      double tolerance, long max_iter) {
  problem.validate();
  if (!(C_reg > 0.0)) throw SolverError("SVM regularization constant must be positive");
  const Eigen::Index n = problem.n();
  const Eigen::Index p = problem.features.cols();
  const Mat& phi = problem.features;
  const BVec& y = problem.pseudo_labels;

  Vec cap = problem.weights * C_reg;
  Vec alpha = Vec::Zero(n);
  Vec w = Vec::Zero(p);
  Vec u = Vec::Zero(n);  // u_i = w . phi_i, maintained incrementally
  Vec sq_norm(n);
  for (Eigen::Index i = 0; i < n; ++i) sq_norm[i] = phi.row(i).squaredNorm();

  SvmSolution sol;
  sol.C_reg = C_reg;
  long iter = 0;
  int stuck = 0;
  KktState state = kkt_bounds(y, alpha, cap, u);
  while (state.arg_lower >= 0 && state.arg_upper >= 0 &&
         state.lower - state.upper > tolerance) {
    if (iter >= max_iter) {
      throw SolverError("SVM failed to converge after " + std::to_string(iter) +
                        " iterations; KKT gap " + std::to_string(state.lower - state.upper));
    }
    const Eigen::Index i = state.arg_lower;
    const Eigen::Index j = state.arg_upper;
    const double yi = static_cast<double>(y[i]);
    const double yj = static_cast<double>(y[j]);
    const double kij = phi.row(i).dot(phi.row(j));
    const double eta = sq_norm[i] + sq_norm[j] - 2.0 * kij;
    const double ei = u[i] - yi;
    const double ej = u[j] - yj;

    // step t on alpha_j; alpha_i moves by sigma * t along the equality
    const double sigma = y[i] != y[j] ? 1.0 : -1.0;
    const double t_j_hi = cap[j] - alpha[j];
    const double t_j_lo = -alpha[j];
    const double t_i_hi = sigma > 0.0 ? cap[i] - alpha[i] : alpha[i];
    const double t_i_lo = sigma > 0.0 ? -alpha[i] : alpha[i] - cap[i];
    const double t_hi = std::min(t_j_hi, t_i_hi);
    const double t_lo = std::max(t_j_lo, t_i_lo);

    double t;
    if (eta > 1e-12) {
      t = std::clamp(yj * (ei - ej) / eta, t_lo, t_hi);
    } else {
      const double slope = yj * (ei - ej);  // descent direction when positive
      t = slope > 0.0 ? t_hi : t_lo;
    }
    if (std::abs(t) < 1e-14) {
      if (++stuck >= 2) {
        throw SolverError("SVM working-set step stalled with KKT gap " +
                          std::to_string(state.lower - state.upper));
      }
    } else {
      stuck = 0;
    }
    const double dj = t;
    const double di = sigma * t;
    alpha[j] += dj;
    alpha[i] += di;
    // snap whichever variable hit its box onto the bound exactly
    if (t == t_j_hi) alpha[j] = cap[j];
    if (t == t_j_lo) alpha[j] = 0.0;
    if (t == t_i_hi) alpha[i] = sigma > 0.0 ? cap[i] : 0.0;
    if (t == t_i_lo) alpha[i] = sigma > 0.0 ? 0.0 : cap[i];
    alpha[j] = std::clamp(alpha[j], 0.0, cap[j]);
    alpha[i] = std::clamp(alpha[i], 0.0, cap[i]);

    const Vec dw = yi * di * phi.row(i).transpose() + yj * dj * phi.row(j).transpose();
    w += dw;
    u += phi * dw;

    ++iter;
    if ((iter & 1023) == 0) sol.objective_trace.push_back(dual_objective(y, alpha, u));
    state = kkt_bounds(y, alpha, cap, u);
  }

  sol.iterations = iter;
  sol.converged = true;
  sol.alpha = alpha;
  sol.beta = w;

  // intercept recovery: margin support vectors first, then the average over
  // all alpha_i < C gamma_i, then the midpoint of the feasible interval
  double sv_sum = 0.0, open_sum = 0.0;
  long sv_count = 0, open_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cap[i] <= 0.0) continue;
    const double v = static_cast<double>(y[i]) - u[i];
    const bool capped = at_cap(alpha[i], cap[i]);
    if (!capped) {
      open_sum += v;
      ++open_count;
    }
    if (!capped && !at_zero(alpha[i], cap[i])) {
      sv_sum += v;
      ++sv_count;
    }
  }
  sol.beta0_unrestricted = open_count > 0 ? open_sum / static_cast<double>(open_count) : 0.0;
  double midpoint = 0.0;
  if (state.arg_lower >= 0 && state.arg_upper >= 0) {
    midpoint = 0.5 * (state.lower + state.upper);
  } else if (state.arg_lower >= 0) {
    midpoint = state.lower;
  } else if (state.arg_upper >= 0) {
    midpoint = state.upper;
  }

  double b = midpoint;
  if (sv_count > 0) {
    b = sv_sum / static_cast<double>(sv_count);
  } else if (open_count > 0) {
    b = sol.beta0_unrestricted;
  }
  if (kkt_residual_at(y, alpha, cap, u, b) > tolerance) b = midpoint;

  sol.beta0 = b;
  sol.kkt_residual = kkt_residual_at(y, alpha, cap, u, b);
  sol.objective_trace.push_back(dual_objective(y, alpha, u));
  return sol;
}

namespace {

double cv_select_c(const WeightedClassificationProblem& problem, const SolverOptions& options) {
  static const double kGrid[] = {0.01, 0.1, 1.0, 10.0, 100.0};
  const Eigen::Index n = problem.n();
  const int k_folds = 5;
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);

  double best_c = 1.0;
  double best_loss = kInf;
  for (const double c : kGrid) {
    double loss = 0.0;
    bool failed = false;
    for (int fold = 0; fold < k_folds && !failed; ++fold) {
      std::vector<Eigen::Index> train, test;
      for (Eigen::Index idx = 0; idx < n; ++idx) {
        (static_cast<int>(idx % k_folds) == fold ? test : train)
            .push_back(order[static_cast<size_t>(idx)]);
      }
      if (train.empty() || test.empty()) continue;
      WeightedClassificationProblem sub;
      sub.features.resize(static_cast<Eigen::Index>(train.size()), problem.features.cols());
      sub.pseudo_labels.resize(static_cast<Eigen::Index>(train.size()));
      sub.weights.resize(static_cast<Eigen::Index>(train.size()));
      for (size_t r = 0; r < train.size(); ++r) {
        sub.features.row(static_cast<Eigen::Index>(r)) = problem.features.row(train[r]);
        sub.pseudo_labels[static_cast<Eigen::Index>(r)] = problem.pseudo_labels[train[r]];
        sub.weights[static_cast<Eigen::Index>(r)] = problem.weights[train[r]];
      }
      try {
        const SvmSolution fit = solve_svm(sub, c, options.tolerance, options.max_iter);
        for (const Eigen::Index idx : test) {
          const double f = fit.beta0 + fit.beta.dot(problem.features.row(idx));
          loss += problem.weights[idx] *
                  std::max(0.0, 1.0 - static_cast<double>(problem.pseudo_labels[idx]) * f);
        }
      } catch (const SolverError&) {
        failed = true;
      }
    }
    if (!failed && loss < best_loss - 1e-12) {
      best_loss = loss;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace

PolicyFit minimize_weighted(const Mat& x, const ScoreTable& scores, const WeightTriple& weights,
                            const FeatureMap& policy_class, const SolverOptions& options) {
  const WeightedClassificationProblem problem = build_problem(x, scores, weights, policy_class);
  if (options.kind == SolverKind::ExactSearch1D) {
    if (policy_class.kind != FeatureMapKind::Threshold1D) {
      throw ConfigError("exact direct search requires a Threshold1D policy class");
    }
    PolicyFit fit = solve_exact_1d(problem, 0);
    fit.policy.feature_map = policy_class;  // back onto the raw covariate column
    return fit;
  }

  const double c_reg = options.select_c ? cv_select_c(problem, options) : options.c_reg;
  const SvmSolution sol = solve_svm(problem, c_reg, options.tolerance, options.max_iter);
  PolicyFit fit;
  fit.policy.beta0 = sol.beta0;
  fit.policy.beta = sol.beta;
  fit.policy.feature_map = policy_class;
  fit.objective = problem_objective(problem, fit.policy.decide_all(x));
  fit.diagnostics.solver = "svm";
  fit.diagnostics.iterations = sol.iterations;
  fit.diagnostics.kkt_residual = sol.kkt_residual;
  fit.diagnostics.objective = fit.objective;
  fit.diagnostics.c_reg = c_reg;
  fit.diagnostics.beta0_unrestricted = sol.beta0_unrestricted;
  fit.diagnostics.objective_trace = sol.objective_trace;
  return fit;
}

}  // namespace strata
