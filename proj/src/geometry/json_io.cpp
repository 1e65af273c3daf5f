#include "lmpc/json_io.hpp"

namespace lmpc {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

}  // namespace

Json to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Json to_json(const Mat& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Vec vec_from_json(const Json& j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) invalid("expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) invalid("expected a number in array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array()) invalid("expected an array of rows");
  if (j.empty()) return Mat();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 1;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = vec_from_json(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) invalid("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Json to_json(const Box& b) { return {{"type", "box"}, {"center", to_json(b.center)}, {"radius", to_json(b.radius)}}; }

Json to_json(const HPolytope& p) { return {{"type", "hrep"}, {"A", to_json(p.A)}, {"b", to_json(p.b)}}; }

Json to_json(const VPolytope& p) {
  return {{"type", "vrep"}, {"vertices", to_json(Mat(p.vertices.transpose()))}};
}

Json to_json(const AnySet& s) {
  return std::visit([](const auto& v) { return to_json(v); }, s);
}

AnySet set_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type")) invalid("set needs a \"type\" field");
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "box") {
      Box b{vec_from_json(j.at("center")), vec_from_json(j.at("radius"))};
      b.validate();
      return b;
    }
    if (type == "hrep") {
      HPolytope p{mat_from_json(j.at("A")), vec_from_json(j.at("b"))};
      if (p.A.rows() != p.b.size()) invalid("hrep A/b row mismatch");
      return p;
    }
    if (type == "vrep") {
      const Mat rows = mat_from_json(j.at("vertices"));
      if (rows.rows() == 0) invalid("vrep needs at least one vertex");
      return convex_hull(Mat(rows.transpose()));
    }
  } catch (const Json::exception& e) {
    invalid(std::string("malformed set: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    invalid(std::string("invalid set: ") + e.what());
  }
  invalid("unknown set type '" + type + "'");
}

HPolytope to_hpolytope(const AnySet& s) {
  if (const auto* b = std::get_if<Box>(&s)) return HPolytope::from_box(*b);
  if (const auto* h = std::get_if<HPolytope>(&s)) return *h;
  const auto& v = std::get<VPolytope>(s);
  if (v.dim() != 2) throw Error(ErrorCode::UnsupportedDimension, "V-rep to H-rep conversion is 2D only");
  return to_hrep_2d(v);
}

VPolytope to_vpolytope(const AnySet& s) {
  if (const auto* b = std::get_if<Box>(&s)) return to_vpolytope(*b);
  if (const auto* v = std::get_if<VPolytope>(&s)) return *v;
  const auto& h = std::get<HPolytope>(s);
  if (h.dim() == 1) {
    const double hi = support(h, Vec::Ones(1));
    const double lo = -support(h, -Vec::Ones(1));
    Mat pts(1, 2);
    pts << lo, hi;
    return convex_hull(pts);
  }
  if (h.dim() != 2) throw Error(ErrorCode::UnsupportedDimension, "H-rep to V-rep conversion is 2D only");
  return to_vrep_2d(h);
}

}  // namespace lmpc
