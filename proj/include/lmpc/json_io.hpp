#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "lmpc/geometry.hpp"

namespace lmpc {

using Json = nlohmann::json;

Json to_json(const Vec& v);
Json to_json(const Mat& m);  // array of rows
Vec vec_from_json(const Json& j);
Mat mat_from_json(const Json& j);

using AnySet = std::variant<Box, HPolytope, VPolytope>;

/// {"type": "box", "center": [...], "radius": [...]}
/// {"type": "hrep", "A": [[...], ...], "b": [...]}
/// {"type": "vrep", "vertices": [[...], ...]}   (one vertex per row)
Json to_json(const Box& b);
Json to_json(const HPolytope& p);
Json to_json(const VPolytope& p);
Json to_json(const AnySet& s);
/// Throws Error(ConfigInvalid) on malformed input.
AnySet set_from_json(const Json& j);

HPolytope to_hpolytope(const AnySet& s);
VPolytope to_vpolytope(const AnySet& s);

}  // namespace lmpc
