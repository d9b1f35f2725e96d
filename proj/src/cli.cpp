#include "strata/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

#include "strata/parallel.hpp"
#include "strata/partial_id.hpp"

namespace strata::cli {

namespace {

const std::set<std::string> kTopKeys = {
    "seed",    "workers",  "utility",        "comparator", "data",
    "dgp",     "scoring",  "policy",         "nuisance_policy",
    "solver",  "replicate", "frontier",      "truth_metrics"};

void reject_unknown(const Json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

FeatureMap parse_feature_map(const Json& j) {
  reject_unknown(j, {"feature_map", "column", "group_column"}, "policy class");
  const std::string kind = j.value("feature_map", "threshold1d");
  if (kind == "identity") return FeatureMap::identity();
  if (kind == "quadratic") return FeatureMap::quadratic();
  if (kind == "quadratic_per_group") {
    return FeatureMap::quadratic_per_group(j.value("group_column", 0));
  }
  if (kind == "threshold1d") return FeatureMap::threshold1d(j.value("column", 0));
  throw ConfigError("unknown feature_map '" + kind + "'");
}

LearnerSpec parse_learner(const Json& j, const std::string& key, const LearnerSpec& fallback) {
  if (!j.contains(key)) return fallback;
  const std::string name = j.at(key).get<std::string>();
  if (name == "logistic") return LearnerSpec::logistic();
  if (name == "stumps") {
    return LearnerSpec::boosted_stumps(j.value("rounds", 200), j.value("shrinkage", 0.1));
  }
  if (name == "known") return LearnerSpec::known(j.value("known_value", 0.5));
  throw ConfigError("unknown learner '" + name + "' for scoring." + key);
}

std::filesystem::path ensure_out_dir(const RunOptions& opts) {
  if (opts.out_dir.empty()) throw ConfigError("an output directory is required (--out)");
  std::filesystem::create_directories(opts.out_dir);
  return opts.out_dir;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

Json defaults_block() {
  return Json{{"propensity_clip", 0.01},
              {"stumps_rounds", 200},
              {"stumps_shrinkage", 0.1},
              {"svm_c_reg", 1.0},
              {"folds", 3},
              {"tie_rule", "decision value exactly 0 assigns treatment"}};
}

Json manifest_base(const std::string& command, const Config& cfg) {
  Json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = cfg.raw;
  m["config_hash"] = json_hash(cfg.raw);
  m["seed"] = cfg.seed;
  m["workers"] = cfg.workers;
  m["defaults"] = defaults_block();
  return m;
}

Json scoring_to_json(const ScoringConfig& s) {
  Json j;
  j["method"] = to_string(s.method);
  switch (s.propensity.kind) {
    case LearnerKind::Logistic:
      j["propensity"] = "logistic";
      break;
    case LearnerKind::BoostedStumps:
      j["propensity"] = "stumps";
      break;
    case LearnerKind::Known:
      j["propensity"] = "known";
      j["known_value"] = s.propensity.known_value;
      break;
  }
  j["outcome"] = s.outcome.kind == LearnerKind::BoostedStumps ? "stumps" : "logistic";
  j["rounds"] = s.outcome.rounds;
  j["shrinkage"] = s.outcome.shrinkage;
  j["folds"] = s.folds;
  j["clip"] = s.clip;
  return j;
}

ScoringConfig scoring_from_json(const Json& j) {
  ScoringConfig s;
  const std::string method = j.value("method", "ipw");
  if (method == "ipw") {
    s.method = ScoreMethod::IPW;
  } else if (method == "dr") {
    s.method = ScoreMethod::DR;
  } else {
    throw ConfigError("unknown scoring method '" + method + "'");
  }
  s.propensity = parse_learner(j, "propensity", LearnerSpec::logistic());
  s.outcome = parse_learner(j, "outcome", LearnerSpec::logistic());
  s.folds = j.value("folds", 3);
  s.clip = j.value("clip", 0.01);
  if (s.folds < 2) throw ConfigError("scoring.folds must be at least 2");
  if (!(s.clip > 0.0 && s.clip < 0.5)) throw ConfigError("scoring.clip must lie in (0, 0.5)");
  return s;
}

}  // namespace

Config parse_config(const Json& raw) {
  if (!raw.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(raw, kTopKeys, "config root");

  Config cfg;
  cfg.raw = raw;
  cfg.seed = raw.value("seed", 42ull);
  cfg.workers = raw.value("workers", 0);

  if (raw.contains("utility")) {
    reject_unknown(raw.at("utility"), {"u_g", "u_l", "cost"}, "utility");
    cfg.utility = utility_from_json(raw.at("utility"));
  }
  cfg.comparator = raw.value("comparator", "auto");
  if (cfg.comparator != "auto" && cfg.comparator != "never" && cfg.comparator != "always" &&
      cfg.comparator != "oracle" && cfg.comparator != "symmetric") {
    throw ConfigError("comparator must be auto|never|always|oracle|symmetric");
  }

  if (raw.contains("data")) {
    const Json& d = raw.at("data");
    reject_unknown(d, {"csv", "treatment", "outcome", "covariates", "y1", "y0", "m1", "m0",
                       "strata"},
                   "data");
    CsvSchema schema;
    schema.treatment = d.value("treatment", "D");
    schema.outcome = d.value("outcome", "Y");
    if (d.contains("covariates")) {
      for (const auto& c : d.at("covariates")) schema.covariates.push_back(c.get<std::string>());
    }
    schema.y1 = d.value("y1", "");
    schema.y0 = d.value("y0", "");
    schema.m1 = d.value("m1", "");
    schema.m0 = d.value("m0", "");
    if (d.contains("strata")) {
      for (const auto& c : d.at("strata")) schema.strata.push_back(c.get<std::string>());
    }
    cfg.data_schema = std::move(schema);
    if (d.contains("csv")) cfg.data_csv = d.at("csv").get<std::string>();
  }

  if (raw.contains("dgp")) {
    const Json& g = raw.at("dgp");
    reject_unknown(g, {"n", "alpha", "beta", "draw_beta", "beta_sd", "x_sd", "p_treat"}, "dgp");
    DgpSpec spec;
    spec.n = g.value("n", 1000l);
    if (g.contains("alpha")) {
      if (g.at("alpha").size() != 4) throw ConfigError("dgp.alpha needs 4 entries");
      for (int s = 0; s < 4; ++s) spec.alpha[static_cast<size_t>(s)] = g.at("alpha")[s];
    }
    if (g.contains("beta")) {
      if (g.at("beta").size() != 4) throw ConfigError("dgp.beta needs 4 entries");
      for (int s = 0; s < 4; ++s) spec.beta[static_cast<size_t>(s)] = g.at("beta")[s];
      spec.draw_beta = false;
    }
    spec.draw_beta = g.value("draw_beta", spec.draw_beta);
    spec.beta_sd = g.value("beta_sd", spec.beta_sd);
    spec.x_sd = g.value("x_sd", spec.x_sd);
    spec.p_treat = g.value("p_treat", spec.p_treat);
    spec.validate();
    cfg.dgp = spec;
  }

  if (raw.contains("scoring")) {
    reject_unknown(raw.at("scoring"),
                   {"method", "propensity", "known_value", "outcome", "rounds", "shrinkage",
                    "folds", "clip"},
                   "scoring");
    cfg.scoring = scoring_from_json(raw.at("scoring"));
    cfg.known_propensity_configured = cfg.scoring.propensity.kind == LearnerKind::Known;
  }

  if (raw.contains("policy")) cfg.policy_class = parse_feature_map(raw.at("policy"));
  if (raw.contains("nuisance_policy")) {
    cfg.nuisance_class = parse_feature_map(raw.at("nuisance_policy"));
  }

  if (raw.contains("solver")) {
    const Json& s = raw.at("solver");
    reject_unknown(s, {"kind", "c_reg", "select_c", "tolerance", "max_iter"}, "solver");
    const std::string kind = s.value("kind", "exact1d");
    if (kind == "exact1d") {
      cfg.solver.kind = SolverKind::ExactSearch1D;
    } else if (kind == "svm") {
      cfg.solver.kind = SolverKind::Svm;
    } else {
      throw ConfigError("solver.kind must be exact1d or svm");
    }
    cfg.solver.c_reg = s.value("c_reg", 1.0);
    cfg.solver.select_c = s.value("select_c", false);
    cfg.solver.tolerance = s.value("tolerance", 1e-6);
    cfg.solver.max_iter = s.value("max_iter", 2000000l);
    if (!(cfg.solver.c_reg > 0.0)) throw ConfigError("solver.c_reg must be positive");
  } else if (cfg.policy_class.kind != FeatureMapKind::Threshold1D) {
    cfg.solver.kind = SolverKind::Svm;
  }

  if (raw.contains("replicate")) {
    const Json& r = raw.at("replicate");
    reject_unknown(r, {"n_grid", "u_l_grid", "u_g", "cost", "reps", "eval_grid_points",
                       "known_propensity"},
                   "replicate");
    if (r.contains("n_grid")) {
      cfg.replicate.n_grid.clear();
      for (const auto& v : r.at("n_grid")) cfg.replicate.n_grid.push_back(v.get<long>());
      cfg.replicate_grid_set = true;
    }
    if (r.contains("u_l_grid")) {
      cfg.replicate.u_l_grid.clear();
      for (const auto& v : r.at("u_l_grid")) cfg.replicate.u_l_grid.push_back(v.get<double>());
    }
    cfg.replicate.u_g = r.value("u_g", 1.0);
    cfg.replicate.cost = r.value("cost", 0.0);
    if (r.contains("reps")) {
      cfg.replicate.reps = r.at("reps").get<int>();
      cfg.replicate_reps_set = true;
    }
    cfg.replicate.eval_grid_points = r.value("eval_grid_points", 10001l);
    cfg.replicate.known_propensity = r.value("known_propensity", true);
  }

  if (raw.contains("frontier")) {
    const Json& f = raw.at("frontier");
    reject_unknown(f, {"u_l_grid", "u_g", "cost", "oracle_comparator"}, "frontier");
    if (f.contains("u_l_grid")) {
      for (const auto& v : f.at("u_l_grid")) cfg.frontier.u_l_grid.push_back(v.get<double>());
    }
    cfg.frontier.u_g = f.value("u_g", 1.0);
    cfg.frontier.cost = f.value("cost", 0.0);
    cfg.frontier.oracle_comparator = f.value("oracle_comparator", false);
  }

  cfg.truth_metrics = raw.value("truth_metrics", "auto");
  if (cfg.truth_metrics != "auto" && cfg.truth_metrics != "require" &&
      cfg.truth_metrics != "off") {
    throw ConfigError("truth_metrics must be auto|require|off");
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json raw;
  try {
    in >> raw;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config parse error in '" + path.string() + "': " + e.what());
  }
  return parse_config(raw);
}

Dataset load_dataset(const Config& cfg) {
  if (cfg.data_csv) {
    if (!cfg.data_schema || cfg.data_schema->covariates.empty()) {
      throw ConfigError("data.covariates must name the covariate columns");
    }
    return dataset_from_csv(*cfg.data_csv, *cfg.data_schema);
  }
  if (cfg.dgp) {
    DgpSpec spec = *cfg.dgp;
    spec.seed = cfg.seed;
    return generate(spec).data;
  }
  throw ConfigError("config needs either data.csv or a dgp block");
}

namespace {

void apply_overrides(Config& cfg, const RunOptions& opts) {
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.raw["seed"] = *opts.seed;
  }
  if (opts.workers) {
    cfg.workers = *opts.workers;
    cfg.raw["workers"] = *opts.workers;
  }
}

struct FitBundle {
  Json bundle;  // serialized policy + nuisances, written as policy.json
  LinearPolicy policy;
  BVec decisions;
  double objective = 0.0;
};

// Shared by cmd_learn and cmd_frontier points: fit per the requested
// comparator and package everything cmd_evaluate needs to rebuild weights.
FitBundle fit_policy_bundle(const Config& cfg, const Dataset& data, const ScoreTable& scores) {
  const FeatureMap nuisance = cfg.nuisance_or_default();
  FitBundle out;
  Json nuisances;

  std::string comparator = cfg.comparator;
  if (comparator == "auto") {
    comparator = cfg.utility.u_g > cfg.utility.u_l ? "always" : "never";
  }
  const bool asymmetric_pairing =
      (comparator == "always" && cfg.utility.u_g >= cfg.utility.u_l) ||
      (comparator == "never" && cfg.utility.u_g <= cfg.utility.u_l);

  if (comparator == "oracle") {
    OracleClasses classes{cfg.policy_class, cfg.policy_class, nuisance, nuisance};
    const OracleFit fit = fit_minimax_oracle(data.x, scores, cfg.utility, classes, cfg.solver);
    out.policy = fit.policy;
    out.objective = fit.objective;
    nuisances["delta_plus"] = to_json(fit.nuisances.delta_plus.policy);
    nuisances["delta_tau"] = to_json(fit.nuisances.delta_tau.policy);
    nuisances["pi_never"] = to_json(fit.nuisances.pi_never);
    nuisances["pi_always"] = to_json(fit.nuisances.pi_always);
    nuisances["symmetric_side_reused_delta_tau"] =
        fit.nuisances.symmetric_side_reused_delta_tau;
    out.bundle["diagnostics"] =
        Json{{"solver", fit.diagnostics.solver},
             {"iterations", fit.diagnostics.iterations},
             {"kkt_residual", fit.diagnostics.kkt_residual},
             {"c_reg", fit.diagnostics.c_reg}};
  } else if (comparator == "symmetric" || !asymmetric_pairing) {
    // requested constant comparator whose minimax solution is the symmetric
    // policy; fit the symmetric objective directly
    WeightTriple sym;
    sym.comparator = comparator == "always" ? Comparator::AlwaysTreat : Comparator::NeverTreat;
    sym.c1 = Vec::Constant(data.n(), cfg.utility.u_g);
    sym.c0 = Vec::Constant(data.n(), -cfg.utility.u_g);
    sym.c = Vec::Constant(data.n(), -cfg.utility.cost);
    const PolicyFit fit = minimize_weighted(data.x, scores, sym, cfg.policy_class, cfg.solver);
    out.policy = fit.policy;
    out.objective = fit.objective;
    const PolicyFit dplus = fit_delta_plus(data.x, scores, nuisance, cfg.solver);
    nuisances["delta_plus"] = to_json(dplus.policy);
    out.bundle["diagnostics"] = Json{{"solver", fit.diagnostics.solver},
                                     {"iterations", fit.diagnostics.iterations},
                                     {"kkt_residual", fit.diagnostics.kkt_residual},
                                     {"c_reg", fit.diagnostics.c_reg}};
  } else {
    const MinimaxFit fit = fit_minimax_constant(data.x, scores, cfg.utility, cfg.policy_class,
                                                nuisance, cfg.solver);
    out.policy = fit.policy;
    out.objective = fit.objective;
    nuisances["delta_plus"] = to_json(fit.delta_plus.policy);
    out.bundle["diagnostics"] = Json{{"solver", fit.diagnostics.solver},
                                     {"iterations", fit.diagnostics.iterations},
                                     {"kkt_residual", fit.diagnostics.kkt_residual},
                                     {"c_reg", fit.diagnostics.c_reg}};
  }

  out.decisions = out.policy.decide_all(data.x);
  out.bundle["policy"] = to_json(out.policy);
  out.bundle["comparator"] = comparator;
  out.bundle["utility"] = to_json(cfg.utility);
  out.bundle["in_sample_objective"] = out.objective;
  out.bundle["scoring"] = scoring_to_json(cfg.scoring);
  out.bundle["seed"] = cfg.seed;
  out.bundle["nuisances"] = std::move(nuisances);
  return out;
}

// Rebuilds the estimation-mode weight triple from a stored policy bundle.
WeightTriple weights_from_bundle(const Json& bundle, const Dataset& data,
                                 const UtilitySpec& utility) {
  const std::string comparator = bundle.at("comparator").get<std::string>();
  const Json& nuisances = bundle.at("nuisances");

  if (comparator == "oracle") {
    ComparatorContext ctx;
    ctx.comparator = Comparator::Oracle;
    ctx.utility = utility;
    ctx.delta_plus = policy_from_json(nuisances.at("delta_plus")).decide_all(data.x);
    ctx.delta_tau = policy_from_json(nuisances.at("delta_tau")).decide_all(data.x);
    ctx.pi_star_never = policy_from_json(nuisances.at("pi_never")).decide_all(data.x);
    ctx.pi_star_always = policy_from_json(nuisances.at("pi_always")).decide_all(data.x);
    return build_weights(ctx);
  }

  const bool asymmetric_pairing =
      (comparator == "always" && utility.u_g >= utility.u_l) ||
      (comparator == "never" && utility.u_g <= utility.u_l);
  if (comparator == "symmetric" || !asymmetric_pairing) {
    WeightTriple sym;
    sym.comparator =
        comparator == "always" ? Comparator::AlwaysTreat : Comparator::NeverTreat;
    sym.c1 = Vec::Constant(data.n(), utility.u_g);
    sym.c0 = Vec::Constant(data.n(), -utility.u_g);
    sym.c = Vec::Constant(data.n(), -utility.cost);
    return sym;
  }

  ComparatorContext ctx;
  ctx.comparator = comparator == "always" ? Comparator::AlwaysTreat : Comparator::NeverTreat;
  ctx.utility = utility;
  ctx.delta_plus = policy_from_json(nuisances.at("delta_plus")).decide_all(data.x);
  ctx.delta_tau = ctx.delta_plus;
  return build_weights(ctx);
}

}  // namespace

void cmd_simulate(Config cfg, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  const auto out_dir = ensure_out_dir(opts);
  if (!cfg.dgp) throw ConfigError("simulate needs a dgp block");

  ReplicateConfig rep = cfg.replicate;
  rep.dgp = *cfg.dgp;
  rep.dgp.seed = cfg.seed;
  rep.scoring = cfg.scoring;
  rep.workers = cfg.workers;
  if (opts.scale == "desk") {
    rep.reps = std::min(rep.reps, 100);
    if (!cfg.replicate_grid_set) rep.n_grid = {100, 500, 1000, 5000};
  } else if (opts.scale == "paper") {
    if (!cfg.replicate_reps_set) rep.reps = 1000;
    if (!cfg.replicate_grid_set) rep.n_grid = {100, 500, 1000, 5000, 10000};
    // time one replication at the largest n and extrapolate
    ReplicateConfig probe = rep;
    probe.reps = 1;
    probe.n_grid = {*std::max_element(rep.n_grid.begin(), rep.n_grid.end())};
    const auto t0 = std::chrono::steady_clock::now();
    replicate(probe);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    const double estimate =
        secs * static_cast<double>(rep.reps) * static_cast<double>(rep.n_grid.size());
    std::cerr << "warning: paper-scale run; rough runtime estimate "
              << static_cast<long>(estimate / 60.0) << " min ("
              << rep.reps << " reps x " << rep.n_grid.size() << " sizes)\n";
  } else {
    throw ConfigError("scale must be desk or paper");
  }

  const ReplicationReport report = replicate(rep);
  for (const auto& msg : report.failure_messages) {
    std::cerr << "replication failure: " << msg << "\n";
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.rows) {
    rows.push_back({std::to_string(r.n), std::to_string(r.rep),
                    std::isnan(r.u_l) ? "" : format_double(r.u_l), r.metric,
                    format_double(r.value)});
  }
  write_csv(out_dir / "replications.csv", {"n", "rep", "u_l", "metric", "value"}, rows);

  Json summary = Json::array();
  std::vector<std::vector<std::string>> misclass_rows, regret_rows;
  for (const auto& s : report.summary) {
    summary.push_back(Json{{"n", s.n},
                           {"u_l", std::isnan(s.u_l) ? Json() : Json(s.u_l)},
                           {"metric", s.metric},
                           {"mean", s.mean},
                           {"se", s.se},
                           {"count", s.count}});
    if (s.metric.rfind("misclass_", 0) == 0 && s.metric.find("_grid") != std::string::npos) {
      misclass_rows.push_back({std::to_string(s.n), s.metric,
                               std::isnan(s.u_l) ? "" : format_double(s.u_l),
                               format_double(s.mean), format_double(s.se)});
    }
    if (s.metric == "regret_oracle_grid") {
      regret_rows.push_back({std::to_string(s.n), format_double(s.u_l), format_double(s.mean),
                             format_double(s.se)});
    }
  }
  Json summary_doc;
  summary_doc["aggregates"] = std::move(summary);
  summary_doc["failures"] = report.failures;
  write_json_file(out_dir / "summary.json", summary_doc);
  write_csv(out_dir / "plot_misclassification_vs_n.csv", {"n", "metric", "u_l", "mean", "se"},
            misclass_rows);
  write_csv(out_dir / "plot_regret_vs_n.csv", {"n", "u_l", "mean_regret", "se"}, regret_rows);

  Json manifest = manifest_base("simulate", cfg);
  manifest["scale"] = opts.scale;
  manifest["reps"] = rep.reps;
  manifest["n_grid"] = rep.n_grid;
  manifest["u_l_grid"] = rep.u_l_grid;
  manifest["failures"] = report.failures;
  manifest["outputs"] = Json::array({"replications.csv", "summary.json",
                                     "plot_misclassification_vs_n.csv",
                                     "plot_regret_vs_n.csv"});
  write_json_file(out_dir / "manifest.json", manifest);
}

void cmd_learn(Config cfg, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  const auto out_dir = ensure_out_dir(opts);
  const Dataset data = load_dataset(cfg);
  const ScoreTable scores =
      compute_scores(data, cfg.scoring, static_cast<unsigned>(cfg.seed & 0xffffffffu));

  const FitBundle fit = fit_policy_bundle(cfg, data, scores);
  write_json_file(out_dir / "policy.json", fit.bundle);
  write_score_csv(out_dir / "scores.csv", scores);

  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < fit.decisions.size(); ++i) {
    rows.push_back({std::to_string(i), std::to_string(fit.decisions[i])});
  }
  write_csv(out_dir / "decisions.csv", {"unit", "decision"}, rows);

  Json manifest = manifest_base("learn", cfg);
  manifest["n"] = data.n();
  manifest["in_sample_objective"] = fit.objective;
  manifest["treated_fraction"] =
      fit.decisions.cast<double>().sum() / static_cast<double>(data.n());
  if (!data.scaling.empty()) {
    Json scaling = Json::array();
    for (const auto& s : data.scaling) {
      scaling.push_back(Json{{"name", s.name}, {"min", s.min}, {"max", s.max}});
    }
    manifest["covariate_scaling"] = std::move(scaling);
  }
  manifest["outputs"] = Json::array({"policy.json", "scores.csv", "decisions.csv"});
  write_json_file(out_dir / "manifest.json", manifest);
}

void cmd_evaluate(Config cfg, const std::filesystem::path& policy_file, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  const auto out_dir = ensure_out_dir(opts);

  std::ifstream in(policy_file);
  if (!in) throw DataError("cannot open policy file '" + policy_file.string() + "'");
  Json bundle;
  try {
    in >> bundle;
  } catch (const Json::parse_error& e) {
    throw DataError("policy file parse error: " + std::string(e.what()));
  }
  const LinearPolicy policy = policy_from_json(bundle.at("policy"));
  const UtilitySpec utility = utility_from_json(bundle.at("utility"));

  const Dataset data = load_dataset(cfg);
  const unsigned scoring_seed =
      static_cast<unsigned>(bundle.value("seed", cfg.seed) & 0xffffffffu);
  const ScoreTable scores = compute_scores(data, cfg.scoring, scoring_seed);
  const BVec decisions = policy.decide_all(data.x);

  Json report;
  report["policy_file"] = policy_file.filename().string();
  report["n"] = data.n();
  report["treated_fraction"] =
      decisions.cast<double>().sum() / static_cast<double>(data.n());

  const WeightTriple weights = weights_from_bundle(bundle, data, utility);
  report["worst_case_objective"] = worst_case_regret(decisions, scores, weights);
  report["comparator"] = bundle.at("comparator");

  if (bundle.at("nuisances").contains("delta_plus")) {
    const BVec dplus =
        policy_from_json(bundle.at("nuisances").at("delta_plus")).decide_all(data.x);
    const ErrorRateBounds rates =
        worst_case_error_rates(decisions, scores.gamma1, scores.gamma0, dplus);
    report["fp_sup"] = rates.fp_sup;
    report["fn_sup"] = rates.fn_sup;
  }
  double outcome = 0.0;
  for (Eigen::Index i = 0; i < decisions.size(); ++i) {
    outcome += decisions[i] == 1 ? scores.gamma1[i] : scores.gamma0[i];
  }
  report["expected_outcome"] = outcome / static_cast<double>(data.n());

  const bool has_truth = data.truth && data.truth->has_scores();
  if (cfg.truth_metrics == "require" && !has_truth) {
    throw DataError(
        "truth-based metrics were requested but the dataset carries no ground truth");
  }
  if (cfg.truth_metrics != "off" && has_truth) {
    const GroundTruth& truth = *data.truth;
    report["value"] = policy_value(decisions, truth, utility);
    report["true_regret_vs_never"] =
        true_regret(decisions, BVec::Zero(data.n()), truth, utility);
    report["true_regret_vs_always"] =
        true_regret(decisions, BVec::Ones(data.n()), truth, utility);
    const BVec oracle = asymmetric_oracle(truth.true_m1(), truth.true_m0(), truth.e01(), utility);
    report["true_regret_vs_oracle"] = true_regret(decisions, oracle, truth, utility);
  }
  write_json_file(out_dir / "evaluation.json", report);

  Json manifest = manifest_base("evaluate", cfg);
  manifest["policy_hash"] = json_hash(bundle);
  manifest["outputs"] = Json::array({"evaluation.json"});
  write_json_file(out_dir / "manifest.json", manifest);
}

void cmd_frontier(Config cfg, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  const auto out_dir = ensure_out_dir(opts);
  if (cfg.frontier.u_l_grid.empty()) throw ConfigError("frontier.u_l_grid must be non-empty");

  const Dataset data = load_dataset(cfg);
  const ScoreTable scores =
      compute_scores(data, cfg.scoring, static_cast<unsigned>(cfg.seed & 0xffffffffu));

  FrontierConfig fcfg = cfg.frontier;
  fcfg.pi_class = cfg.policy_class;
  fcfg.nuisance_class = cfg.nuisance_or_default();
  fcfg.solver = cfg.solver;
  fcfg.workers = cfg.workers;
  const FrontierResult result = frontier_sweep(data.x, scores, fcfg);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<double, double>> fp_fn;
  std::vector<std::vector<std::string>> outcome_rows;
  for (const auto& p : result.points) {
    if (p.failed) {
      std::cerr << "frontier point " << p.label << " failed: " << p.error << "\n";
      continue;
    }
    rows.push_back({p.label, std::isnan(p.u_l) ? "" : format_double(p.u_l),
                    to_string(p.comparator), format_double(p.treated_fraction),
                    format_double(p.fp_sup), format_double(p.fn_sup),
                    format_double(p.expected_outcome), p.symmetric ? "1" : "0"});
    fp_fn.emplace_back(p.fp_sup, p.fn_sup);
    outcome_rows.push_back({p.label, format_double(p.fp_sup), format_double(p.fn_sup),
                            format_double(p.expected_outcome)});
  }
  write_csv(out_dir / "frontier.csv",
            {"label", "u_l", "comparator", "treated_fraction", "fp_sup", "fn_sup",
             "expected_outcome", "symmetric"},
            rows);

  std::vector<std::vector<std::string>> envelope_rows;
  for (const auto& [fp, fn] : convex_lower_envelope(fp_fn)) {
    envelope_rows.push_back({format_double(fp), format_double(fn)});
  }
  write_csv(out_dir / "envelope.csv", {"fp_sup", "fn_sup"}, envelope_rows);
  write_csv(out_dir / "plot_fp_vs_fn.csv", {"label", "fp_sup", "fn_sup", "expected_outcome"},
            outcome_rows);

  Json manifest = manifest_base("frontier", cfg);
  manifest["u_l_grid"] = cfg.frontier.u_l_grid;
  manifest["outputs"] =
      Json::array({"frontier.csv", "envelope.csv", "plot_fp_vs_fn.csv"});
  write_json_file(out_dir / "manifest.json", manifest);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Minimax policy learning under principal-strata utilities"};
  app.require_subcommand(1);

  std::string config_path, out_dir, policy_file, scale = "desk";
  std::int64_t seed = -1;
  int workers = -1;

  auto add_common = [&](CLI::App* sub, bool needs_policy = false) {
    sub->add_option("--config", config_path, "config JSON file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override config seed");
    sub->add_option("--workers", workers, "worker pool size (env STRATA_WORKERS overrides)");
    sub->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    if (needs_policy) {
      sub->add_option("--policy", policy_file, "fitted policy.json")->required();
    }
  };

  CLI::App* sim = app.add_subcommand("simulate", "replication study on the simulation DGP");
  add_common(sim);
  CLI::App* learn = app.add_subcommand("learn", "fit a minimax policy on a dataset");
  add_common(learn);
  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a fitted policy");
  add_common(eval, true);
  CLI::App* frontier = app.add_subcommand("frontier", "sweep the utility grid");
  add_common(frontier);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config cfg = load_config(config_path);
    RunOptions opts;
    opts.out_dir = out_dir;
    if (seed >= 0) opts.seed = static_cast<std::uint64_t>(seed);
    if (workers >= 0) opts.workers = workers;
    opts.scale = scale;

    if (sim->parsed()) {
      cmd_simulate(std::move(cfg), opts);
    } else if (learn->parsed()) {
      cmd_learn(std::move(cfg), opts);
    } else if (eval->parsed()) {
      cmd_evaluate(std::move(cfg), policy_file, opts);
    } else if (frontier->parsed()) {
      cmd_frontier(std::move(cfg), opts);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace strata::cli
