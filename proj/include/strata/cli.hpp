#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "strata/csv.hpp"
#include "strata/evaluate.hpp"
#include "strata/serialize.hpp"
#include "strata/simulate.hpp"

namespace strata::cli {

inline constexpr const char* kVersion = "0.1.0";

// One config schema shared by every subcommand; unknown keys are rejected so
// typos fail loudly.
struct Config {
  Json raw;

  std::uint64_t seed = 42;
  int workers = 0;
  UtilitySpec utility;
  std::string comparator = "auto";  // auto | never | always | oracle | symmetric

  std::optional<CsvSchema> data_schema;
  std::optional<std::filesystem::path> data_csv;
  std::optional<DgpSpec> dgp;

  ScoringConfig scoring;
  bool known_propensity_configured = false;

  FeatureMap policy_class = FeatureMap::threshold1d(0);
  std::optional<FeatureMap> nuisance_class;  // defaults to policy_class.enriched()
  SolverOptions solver;

  ReplicateConfig replicate;
  bool replicate_reps_set = false;
  bool replicate_grid_set = false;

  FrontierConfig frontier;

  std::string truth_metrics = "auto";  // auto | require | off

  FeatureMap nuisance_or_default() const {
    return nuisance_class ? *nuisance_class : policy_class.enriched();
  }
};

Config parse_config(const Json& raw);
Config load_config(const std::filesystem::path& path);

// Returns the dataset named by the config: a CSV when one is given,
// otherwise a freshly generated simulation sample.
Dataset load_dataset(const Config& cfg);

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string scale = "desk";  // desk | paper
};

void cmd_simulate(Config cfg, const RunOptions& opts);
void cmd_learn(Config cfg, const RunOptions& opts);
void cmd_evaluate(Config cfg, const std::filesystem::path& policy_file, const RunOptions& opts);
void cmd_frontier(Config cfg, const RunOptions& opts);

// Full argv-level entry point; maps errors onto exit codes
// (0 ok, 2 config, 3 data, 4 solver).
int run_cli(int argc, const char* const* argv);

}  // namespace strata::cli
