#include <cmath>
#include <cstdio>
#include <sstream>

#include "lmpc/harness.hpp"

namespace lmpc {

Json to_json(const Proportion& p) {
  return {{"events", p.events}, {"trials", p.trials}, {"estimate", p.estimate}, {"lower", p.lower}, {"upper", p.upper}};
}

Json to_json(const IterationReport& r) {
  Json j;
  j["iteration"] = r.iteration;
  j["controller"] = r.controller;
  j["horizon"] = r.horizon;
  j["x0"] = to_json(r.x0);
  j["probe_distance"] = r.probe_distance;
  j["probe_solves"] = r.probe_solves;
  j["worst_case_cost"] = r.worst_case_cost;
  j["rollouts"] = r.rollouts;
  j["reached_goal"] = r.reached_goal;
  j["max_time_to_goal"] = r.max_time_to_goal;
  j["mean_time_to_goal"] = r.mean_time_to_goal;
  j["max_violation"] = r.max_violation;
  j["evaluation"] = {{"rollouts", r.evaluation_rollouts},
                     {"reached_goal", r.evaluation_reached_goal},
                     {"max_violation", r.evaluation_max_violation},
                     {"max_time_to_goal", r.evaluation_max_time_to_goal}};
  if (r.epsilon) j["epsilon"] = to_json(*r.epsilon);
  if (r.gamma) j["gamma"] = to_json(*r.gamma);
  j["safe_set_vertices"] = r.safe_set_vertices;
  j["terminal_points"] = r.terminal_points;
  j["q_facets"] = r.q_facets;
  j["rollout_costs"] = r.rollout_costs;
  return j;
}

Json to_json(const TerminalData& td) {
  Json pts = Json::array();
  for (const auto& p : td.points)
    pts.push_back({{"vertex", to_json(p.vertex)}, {"cost", p.cost}, {"iteration", p.iteration}, {"step", p.step}});
  return {{"points", pts}};
}

TerminalData terminal_data_from_json(const Json& j) {
  TerminalData td;
  try {
    for (const auto& p : j.at("points")) {
      TerminalPoint t;
      t.vertex = vec_from_json(p.at("vertex"));
      t.cost = p.at("cost").get<double>();
      t.iteration = p.value("iteration", -1);
      t.step = p.value("step", -1);
      if (!t.vertex.allFinite() || !std::isfinite(t.cost)) throw Error(ErrorCode::ConfigInvalid, "non-finite point");
      if (td.size() > 0 && t.vertex.size() != td.dim()) throw Error(ErrorCode::ConfigInvalid, "mixed dimensions");
      td.points.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("terminal data: ") + e.what());
  }
  if (td.points.empty()) throw Error(ErrorCode::ConfigInvalid, "terminal data has no points");
  return td;
}

Json to_json(const ConvexSafeSetApprox& cs) {
  Json prov = Json::array();
  for (const auto& p : cs.provenance()) prov.push_back({{"iteration", p.iteration}, {"step", p.step}});
  Json j = {{"hull", to_json(cs.hull())}, {"provenance", prov}};
  if (cs.hrep().rows() > 0) j["hrep"] = to_json(cs.hrep());
  return j;
}

Json to_json(const RolloutRecord& r) {
  Json states = Json::array();
  for (const Vec& x : r.states) states.push_back(to_json(x));
  Json inputs = Json::array();
  for (const Vec& u : r.inputs) inputs.push_back(to_json(u));
  return {{"iteration", r.iteration}, {"index", r.index},         {"seed", r.seed},
          {"time_to_goal", r.time_to_goal}, {"states", states}, {"inputs", inputs},
          {"cost_to_go", r.cost_to_go}};
}

Json to_json(const EpsilonGammaReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"rollouts", e.rollouts},
                       {"safe_set_vertices", e.safe_set_vertices},
                       {"terminal_points", e.terminal_points},
                       {"epsilon", to_json(e.epsilon)},
                       {"gamma", to_json(e.gamma)}});
  return {{"x0", to_json(r.x0)}, {"monte_carlo", r.monte_carlo}, {"nested", r.nested}, {"entries", entries}};
}

Json to_json(const AssumptionReport& r) {
  return {{"ok", r.ok()},
          {"invariance", r.invariance},
          {"invariance_margin", r.invariance_margin},
          {"input_admissible", r.input_admissible},
          {"cost_bounds", r.cost_bounds},
          {"mrpi_horizon", r.mrpi_horizon},
          {"mrpi_alpha", r.mrpi_alpha},
          {"goal_vertices", r.goal_vertices}};
}

namespace {

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;

  double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

Axis parse_axis(const std::string& s) {
  Axis a;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> a.lo >> c1 >> a.hi >> c2 >> a.n) || c1 != ':' || c2 != ':' || !in.eof() || a.n < 1 || !(a.lo <= a.hi))
    throw Error(ErrorCode::ConfigInvalid, "bad grid axis '" + s + "', expected min:max:count");
  return a;
}

}  // namespace

std::string q_surface_csv(const QFunction& q, const std::string& grid) {
  const auto comma = grid.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "grid needs two axes separated by ','");
  const Axis ax = parse_axis(grid.substr(0, comma));
  const Axis ay = parse_axis(grid.substr(comma + 1));
  if (q.data().dim() != 2) throw Error(ErrorCode::UnsupportedDimension, "Q surface needs 2D terminal data");
  std::string out = "x,y,Q\n";
  char buf[96];
  for (int iy = 0; iy < ay.n; ++iy) {
    for (int ix = 0; ix < ax.n; ++ix) {
      Vec x(2);
      x << ax.at(ix), ay.at(iy);
      const auto v = q(x);
      if (v) std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[0], x[1], *v);
      else std::snprintf(buf, sizeof buf, "%.17g,%.17g,inf\n", x[0], x[1]);
      out += buf;
    }
  }
  return out;
}

}  // namespace lmpc
