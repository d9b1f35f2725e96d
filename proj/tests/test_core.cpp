#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "strata/csv.hpp"
#include "strata/serialize.hpp"
#include "strata/simulate.hpp"
#include "strata/types.hpp"

using namespace strata;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path);
  out << contents;
}

}  // namespace

TEST_CASE("csv ingestion: small file with rescaling") {
  const auto path = temp_file("strata_small_test.csv");
  write_file(path,
             "D,Y,age,flat\n"
             "1,1,10,5.0\n"
             "0,0,20,5.0\n"
             "1,0,30,5.0\n");
  CsvSchema schema;
  schema.treatment = "D";
  schema.outcome = "Y";
  schema.covariates = {"age", "flat"};
  const Dataset data = dataset_from_csv(path, schema);
  CHECK(data.n() == 3);
  CHECK(data.x(0, 0) == doctest::Approx(0.0));
  CHECK(data.x(1, 0) == doctest::Approx(0.5));
  CHECK(data.x(2, 0) == doctest::Approx(1.0));
  // constant column rescales to all zeros
  CHECK(data.x.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(data.scaling[0].min == 10.0);
  CHECK(data.scaling[0].max == 30.0);
}

TEST_CASE("csv ingestion: schema and validation errors") {
  const auto path = temp_file("strata_bad.csv");
  CsvSchema schema;
  schema.treatment = "D";
  schema.outcome = "Y";
  schema.covariates = {"x"};

  write_file(path, "D,Y\n1,1\n");
  CHECK_THROWS_AS(dataset_from_csv(path, schema), DataError);  // missing column

  write_file(path, "D,Y,x\n2,1,0.5\n");
  CHECK_THROWS_AS(dataset_from_csv(path, schema), DataError);  // non-binary treatment

  write_file(path, "D,Y,x\n1,1,nan\n");
  CHECK_THROWS_WITH_AS(dataset_from_csv(path, schema),
                       doctest::Contains("row 1"), DataError);  // NaN covariate names the row
}

TEST_CASE("csv ingestion: RHC-sized file round trips the counts") {
  const auto path = temp_file("strata_rhc_style.csv");
  std::ofstream out(path);
  out << "swang1,death30,aps\n";
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 5735, treated = 2184;
  for (int i = 0; i < n; ++i) {
    out << (i < treated ? 1 : 0) << "," << (unif(rng) < 0.35 ? 1 : 0) << "," << 20 + 60 * unif(rng)
        << "\n";
  }
  out.close();
  CsvSchema schema;
  schema.treatment = "swang1";
  schema.outcome = "death30";
  schema.covariates = {"aps"};
  const Dataset data = dataset_from_csv(path, schema);
  CHECK(data.n() == n);
  CHECK(data.d.sum() == treated);
  CHECK(data.x.col(0).minCoeff() == doctest::Approx(0.0));
  CHECK(data.x.col(0).maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("policy decisions: tie rule and examples") {
  LinearPolicy zero;
  zero.beta0 = 0.0;
  zero.beta = Vec::Zero(1);
  zero.feature_map = FeatureMap::identity();
  Vec x(1);
  x << 123.0;
  CHECK(policy_decide(zero, x) == 1);  // tie at exactly 0 treats

  LinearPolicy p;
  p.beta0 = -0.5;
  p.beta = Vec::Ones(1);
  p.feature_map = FeatureMap::identity();
  x << 0.4;
  CHECK(policy_decide(p, x) == 0);
  x << 0.5;
  CHECK(policy_decide(p, x) == 1);
  CHECK(policy_decide(p, x) == policy_decide(p, x));

  Vec wrong(2);
  wrong << 0.1, 0.2;
  CHECK_THROWS_AS(policy_decide(p, wrong), DataError);
}

TEST_CASE("feature maps: dimensions and quadratic-per-group layout") {
  const FeatureMap qpg = FeatureMap::quadratic_per_group(1);
  Vec row(2);
  row << 0.3, 1.0;  // continuous, group
  const Vec phi = qpg.apply(row);
  REQUIRE(phi.size() == 5);
  CHECK(phi[0] == 1.0);  // group indicator
  CHECK(phi[1] == 0.0);  // base-group features vanish
  CHECK(phi[3] == doctest::Approx(0.3));
  CHECK(phi[4] == doctest::Approx(0.09));

  row << 0.3, 0.0;
  const Vec phi0 = qpg.apply(row);
  CHECK(phi0[0] == 0.0);
  CHECK(phi0[1] == doctest::Approx(0.3));
  CHECK(phi0[2] == doctest::Approx(0.09));
  CHECK(phi0[3] == 0.0);

  CHECK(FeatureMap::identity().output_dim(3) == 3);
  CHECK(FeatureMap::quadratic().output_dim(3) == 6);
  CHECK(FeatureMap::threshold1d(2).output_dim(3) == 1);
  CHECK(FeatureMap::identity().enriched().kind == FeatureMapKind::Quadratic);
}

TEST_CASE("score table xi tracks the realized maximum") {
  Vec g0(3), g1(3);
  g0 << 0.0, 2.0, -1.0;
  g1 << 4.0, 0.0, 0.5;
  const ScoreTable t = ScoreTable::make(g0, g1, ScoreMethod::IPW);
  CHECK(t.xi == 4.0);

  ScoreTable bad = t;
  bad.xi = 1.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("serialization round trips are field-exact") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);

  for (int trial = 0; trial < 25; ++trial) {
    LinearPolicy p;
    p.beta0 = trial == 0 ? std::numeric_limits<double>::infinity()
                         : (trial == 1 ? -std::numeric_limits<double>::infinity() : unif(rng));
    p.beta = Vec::NullaryExpr(3, [&](Eigen::Index) { return unif(rng); });
    p.feature_map = FeatureMap::quadratic_per_group(1);
    const LinearPolicy q = policy_from_json(to_json(p));
    CHECK(q.beta0 == p.beta0);
    CHECK((q.beta - p.beta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(q.feature_map == p.feature_map);
  }

  UtilitySpec u{1.25, 0.8125, 0.0625};
  const UtilitySpec u2 = utility_from_json(to_json(u));
  CHECK(u2.u_g == u.u_g);
  CHECK(u2.u_l == u.u_l);
  CHECK(u2.cost == u.cost);

  DgpSpec spec;
  spec.n = 40;
  spec.seed = 3;
  const Dataset data = generate(spec).data;
  const Dataset back = dataset_from_json(to_json(data));
  CHECK(back.n() == data.n());
  CHECK((back.x - data.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.d - data.d).cwiseAbs().maxCoeff() == 0);
  CHECK((back.y - data.y).cwiseAbs().maxCoeff() == 0);
  REQUIRE(back.truth.has_value());
  CHECK((back.truth->principal_scores.value() - data.truth->principal_scores.value())
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("ground truth: m1 - m0 equals e10 - e01 row-wise") {
  DgpSpec spec;
  spec.n = 500;
  spec.seed = 11;
  const Dataset data = generate(spec).data;
  const Mat& e = *data.truth->principal_scores;
  const Vec lhs = data.truth->true_m1() - data.truth->true_m0();
  const Vec rhs = e.col(kUseful) - e.col(kHarmful);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("dataset validation catches inconsistent observed outcomes") {
  DgpSpec spec;
  spec.n = 20;
  spec.seed = 5;
  Dataset data = generate(spec).data;
  data.y[0] = 1 - data.y[0];
  CHECK_THROWS_AS(data.validate(), DataError);
}
