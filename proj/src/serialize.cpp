#include "strata/serialize.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace strata {

Json double_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) throw DataError("cannot serialize NaN");
  return v > 0 ? "inf" : "-inf";
}

double double_from_json(const Json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("unrecognized numeric string '" + s + "'");
  }
  return j.get<double>();
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(double_to_json(v[i]));
  return a;
}

Vec vec_from_json(const Json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v[i++] = double_from_json(e);
  return v;
}

Json to_json(const BVec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

BVec bvec_from_json(const Json& j) {
  BVec v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v[i++] = e.get<int>();
  return v;
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(double_to_json(m(i, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Mat m(rows, cols);
  Eigen::Index i = 0;
  for (const auto& row : j) {
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("ragged matrix in JSON");
    Eigen::Index c = 0;
    for (const auto& e : row) m(i, c++) = double_from_json(e);
    ++i;
  }
  return m;
}

Json to_json(const FeatureMap& f) {
  Json j;
  switch (f.kind) {
    case FeatureMapKind::Identity:
      j["kind"] = "identity";
      break;
    case FeatureMapKind::Quadratic:
      j["kind"] = "quadratic";
      break;
    case FeatureMapKind::QuadraticPerGroup:
      j["kind"] = "quadratic_per_group";
      j["group_column"] = f.group_column;
      break;
    case FeatureMapKind::Threshold1D:
      j["kind"] = "threshold1d";
      j["column"] = f.column;
      break;
  }
  return j;
}

FeatureMap feature_map_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return FeatureMap::identity();
  if (kind == "quadratic") return FeatureMap::quadratic();
  if (kind == "quadratic_per_group") {
    return FeatureMap::quadratic_per_group(j.at("group_column").get<int>());
  }
  if (kind == "threshold1d") return FeatureMap::threshold1d(j.at("column").get<int>());
  throw ConfigError("unknown feature map kind '" + kind + "'");
}

Json to_json(const LinearPolicy& p) {
  Json j;
  j["beta0"] = double_to_json(p.beta0);
  j["beta"] = to_json(p.beta);
  j["feature_map"] = to_json(p.feature_map);
  return j;
}

LinearPolicy policy_from_json(const Json& j) {
  LinearPolicy p;
  p.beta0 = double_from_json(j.at("beta0"));
  p.beta = vec_from_json(j.at("beta"));
  p.feature_map = feature_map_from_json(j.at("feature_map"));
  return p;
}

Json to_json(const UtilitySpec& u) {
  return Json{{"u_g", u.u_g}, {"u_l", u.u_l}, {"cost", u.cost}};
}

UtilitySpec utility_from_json(const Json& j) {
  UtilitySpec u;
  u.u_g = j.at("u_g").get<double>();
  u.u_l = j.at("u_l").get<double>();
  u.cost = j.value("cost", 0.0);
  u.validate();
  return u;
}

Json to_json(const ScoreTable& t) {
  Json j;
  j["gamma0"] = to_json(t.gamma0);
  j["gamma1"] = to_json(t.gamma1);
  j["method"] = to_string(t.method);
  j["xi"] = t.xi;
  return j;
}

ScoreTable score_table_from_json(const Json& j) {
  ScoreTable t;
  t.gamma0 = vec_from_json(j.at("gamma0"));
  t.gamma1 = vec_from_json(j.at("gamma1"));
  t.method = j.at("method").get<std::string>() == "ipw" ? ScoreMethod::IPW : ScoreMethod::DR;
  t.xi = j.at("xi").get<double>();
  t.validate();
  return t;
}

Json to_json(const WeightTriple& w) {
  Json j;
  j["c1"] = to_json(w.c1);
  j["c0"] = to_json(w.c0);
  j["c"] = to_json(w.c);
  j["comparator"] = to_string(w.comparator);
  return j;
}

WeightTriple weights_from_json(const Json& j) {
  WeightTriple w;
  w.c1 = vec_from_json(j.at("c1"));
  w.c0 = vec_from_json(j.at("c0"));
  w.c = vec_from_json(j.at("c"));
  const std::string c = j.at("comparator").get<std::string>();
  if (c == "never") {
    w.comparator = Comparator::NeverTreat;
  } else if (c == "always") {
    w.comparator = Comparator::AlwaysTreat;
  } else if (c == "oracle") {
    w.comparator = Comparator::Oracle;
  } else {
    throw ConfigError("unknown comparator '" + c + "'");
  }
  w.validate();
  return w;
}

Json to_json(const Dataset& d) {
  Json j;
  j["x"] = to_json(d.x);
  j["d"] = to_json(d.d);
  j["y"] = to_json(d.y);
  if (d.truth) {
    Json t;
    t["y1"] = to_json(d.truth->y1);
    t["y0"] = to_json(d.truth->y0);
    if (d.truth->principal_scores) t["principal_scores"] = to_json(*d.truth->principal_scores);
    if (d.truth->m1) t["m1"] = to_json(*d.truth->m1);
    if (d.truth->m0) t["m0"] = to_json(*d.truth->m0);
    j["truth"] = std::move(t);
  }
  if (!d.scaling.empty()) {
    Json s = Json::array();
    for (const auto& col : d.scaling) {
      s.push_back(Json{{"name", col.name}, {"min", col.min}, {"max", col.max}});
    }
    j["scaling"] = std::move(s);
  }
  return j;
}

Dataset dataset_from_json(const Json& j) {
  Dataset d;
  d.x = mat_from_json(j.at("x"));
  d.d = bvec_from_json(j.at("d"));
  d.y = bvec_from_json(j.at("y"));
  if (j.contains("truth")) {
    GroundTruth t;
    const Json& tj = j.at("truth");
    t.y1 = bvec_from_json(tj.at("y1"));
    t.y0 = bvec_from_json(tj.at("y0"));
    if (tj.contains("principal_scores")) t.principal_scores = mat_from_json(tj.at("principal_scores"));
    if (tj.contains("m1")) t.m1 = vec_from_json(tj.at("m1"));
    if (tj.contains("m0")) t.m0 = vec_from_json(tj.at("m0"));
    d.truth = std::move(t);
  }
  if (j.contains("scaling")) {
    for (const auto& s : j.at("scaling")) {
      d.scaling.push_back({s.at("name").get<std::string>(), s.at("min").get<double>(),
                           s.at("max").get<double>()});
    }
  }
  d.validate();
  return d;
}

std::string json_hash(const Json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace strata
