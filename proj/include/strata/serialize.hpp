#pragma once

#include <json.hpp>

#include "strata/types.hpp"

namespace strata {

using Json = nlohmann::json;

// JSON adapters for the core types. Doubles round-trip exactly; non-finite
// values (the treat-all/treat-none sentinel intercepts) are encoded as the
// strings "inf"/"-inf".

Json double_to_json(double v);
double double_from_json(const Json& j);

Json to_json(const Vec& v);
Vec vec_from_json(const Json& j);
Json to_json(const BVec& v);
BVec bvec_from_json(const Json& j);
Json to_json(const Mat& m);
Mat mat_from_json(const Json& j);

Json to_json(const FeatureMap& f);
FeatureMap feature_map_from_json(const Json& j);

Json to_json(const LinearPolicy& p);
LinearPolicy policy_from_json(const Json& j);

Json to_json(const UtilitySpec& u);
UtilitySpec utility_from_json(const Json& j);

Json to_json(const ScoreTable& t);
ScoreTable score_table_from_json(const Json& j);

Json to_json(const WeightTriple& w);
WeightTriple weights_from_json(const Json& j);

Json to_json(const Dataset& d);
Dataset dataset_from_json(const Json& j);

// 64-bit FNV-1a over the canonical dump, hex-encoded; used for manifests.
std::string json_hash(const Json& j);

}  // namespace strata
