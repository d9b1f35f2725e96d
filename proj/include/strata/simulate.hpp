#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "strata/nuisance.hpp"
#include "strata/types.hpp"

namespace strata {

// Log-linear principal-strata generator: X ~ N(0, x_sd), strata probabilities
// softmax(alpha_s + x beta_s) in the order (e00, e10, e01, e11), joint
// potential outcomes sampled from them, randomized treatment Bernoulli(p_treat).
struct DgpSpec {
  long n = 1000;
  std::array<double, 4> alpha = {0.2, 0.15, 0.0, 0.0};
  std::array<double, 4> beta = {0.0, 0.0, 0.0, 0.0};
  bool draw_beta = true;        // redraw beta ~ N(0, beta_sd^2) with beta_11 = 0
  double beta_sd = 6.324555320336759;  // sqrt(40)
  double x_sd = 1.4142135623730951;    // sqrt(2)
  double p_treat = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Strata probabilities at one covariate value.
std::array<double, 4> strata_probs(const std::array<double, 4>& alpha,
                                   const std::array<double, 4>& beta, double x);

struct GeneratedSample {
  Dataset data;
  std::array<double, 4> beta_used;  // realized beta (equals spec.beta unless drawn)
};

GeneratedSample generate(const DgpSpec& spec);

// Scoring pipeline shared by the replication harness and the CLI.
struct ScoringConfig {
  ScoreMethod method = ScoreMethod::IPW;
  LearnerSpec propensity = LearnerSpec::logistic();
  LearnerSpec outcome = LearnerSpec::logistic();
  int folds = 3;
  double clip = 0.01;
};

ScoreTable compute_scores(const Dataset& data, const ScoringConfig& cfg, unsigned seed);

struct ReplicateConfig {
  DgpSpec dgp;  // n is overridden by each grid entry
  std::vector<long> n_grid = {100, 500, 1000, 5000, 10000};
  std::vector<double> u_l_grid = {0.6, 0.8, 1.0, 1.2, 1.4};
  double u_g = 1.0;
  double cost = 0.0;
  int reps = 100;
  long eval_grid_points = 10001;
  ScoringConfig scoring;         // propensity defaults to known(p_treat)
  bool known_propensity = true;  // Section-5 style randomized assignment
  int workers = 0;
};

struct ReplicationRow {
  long n = 0;
  int rep = 0;
  double u_l = 0.0;  // NaN for metrics that do not depend on u_l
  std::string metric;
  double value = 0.0;
};

struct MetricSummary {
  long n = 0;
  double u_l = 0.0;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  long count = 0;
};

struct ReplicationReport {
  std::vector<ReplicationRow> rows;
  std::vector<MetricSummary> summary;
  long failures = 0;
  std::vector<std::string> failure_messages;  // first few, for the log
};

// For each (n, replication, u_l): generates a fresh sample, scores it, runs
// the oracle-comparator pipeline with 1-D threshold classes and exact search,
// and records nuisance/policy misclassification against the closed forms plus
// the true regret against the asymmetric oracle, both on a fresh covariate
// quantile grid (suffix _grid) and in sample (suffix _insample).
ReplicationReport replicate(const ReplicateConfig& cfg);

double normal_quantile(double p);  // inverse standard normal CDF

}  // namespace strata
