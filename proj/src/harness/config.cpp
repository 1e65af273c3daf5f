#include <fstream>
#include <set>

#include "lmpc/harness.hpp"

namespace lmpc {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

const std::set<std::string> kTopKeys = {
    "system",  "lqr",          "mrpi_contraction",   "horizon",    "rollouts",      "iterations",
    "direction", "direction_perp", "weights",        "master_seed", "t_max",        "mode",
    "x0",        "evaluation_rollouts", "threads",   "output_dir", "bootstrap_max_leaves", "probe_tol",
    "epsilon_gamma"};

void reject_unknown(const Json& j, const std::set<std::string>& keys, const std::string& where) {
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) invalid("unknown key '" + where + k + "'");
}

template <class T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("field '") + key + "': " + e.what());
  }
}

Vec get_vec(const Json& j, const char* key, const Vec& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return vec_from_json(j.at(key));
  } catch (const Error& e) {
    invalid(std::string("field '") + key + "': " + e.what());
  }
}

Mat get_mat(const Json& j, const char* key, const Mat& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return mat_from_json(j.at(key));
  } catch (const Error& e) {
    invalid(std::string("field '") + key + "': " + e.what());
  }
}

LtiSystem system_from_json(const Json& j, const LtiSystem& fallback) {
  reject_unknown(j, {"A", "B", "W", "X", "U"}, "system.");
  LtiSystem s = fallback;
  s.A = get_mat(j, "A", s.A);
  s.B = get_mat(j, "B", s.B);
  if (j.contains("W")) {
    const AnySet w = set_from_json(j.at("W"));
    if (!std::holds_alternative<Box>(w)) invalid("system.W must be a box");
    s.W = std::get<Box>(w);
  }
  if (j.contains("X")) s.X = to_hpolytope(set_from_json(j.at("X")));
  if (j.contains("U")) s.U = to_hpolytope(set_from_json(j.at("U")));
  return s;
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Explore:
      return "explore";
    case Mode::CostStudy:
      return "cost-study";
    case Mode::EpsilonGamma:
      return "epsilon-gamma";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "explore") return Mode::Explore;
  if (s == "cost-study" || s == "cost_study") return Mode::CostStudy;
  if (s == "epsilon-gamma" || s == "epsilon_gamma") return Mode::EpsilonGamma;
  invalid("unknown mode '" + s + "'");
}

CampaignConfig benchmark_config(Mode mode) {
  CampaignConfig c;
  c.system.A = Mat(2, 2);
  c.system.A << 1.0, 1.0, 0.0, 1.0;
  c.system.B = Mat(2, 1);
  c.system.B << 0.0, 1.0;
  c.system.W = Box::ball(2, 0.1);
  c.system.X = HPolytope::from_box(Box::ball(2, 10.0));
  c.system.U = HPolytope::from_box(Box::ball(1, 1.0));
  c.lqr_Q = Mat::Identity(2, 2);
  c.lqr_R = Mat::Identity(1, 1);
  c.direction = Vec(2);
  c.direction << -1.0, 0.0;
  c.direction_perp = Vec(2);
  c.direction_perp << 0.0, 1.0;
  c.mode = mode;
  if (mode == Mode::CostStudy) {
    c.state_weight = 0.1;
    c.input_weight = 1.0;
    c.x0 = Vec(2);
    *c.x0 << -9.9, 0.0;
  }
  if (mode == Mode::EpsilonGamma) c.iterations = 1;
  return c;
}

void CampaignConfig::validate() const {
  try {
    system.validate();
  } catch (const Error& e) {
    invalid(std::string("system: ") + e.what());
  }
  const int n = system.nx();
  const int m = system.nu();
  if (system.W.dim() != n || system.X.dim() != n || system.U.dim() != m) invalid("system: set dimensions");
  if (lqr_Q.rows() != n || lqr_Q.cols() != n) invalid("lqr.Q must be nx × nx");
  if (lqr_R.rows() != m || lqr_R.cols() != m) invalid("lqr.R must be nu × nu");
  if (!(mrpi_contraction > 0.0 && mrpi_contraction < 1.0)) invalid("mrpi_contraction must lie in (0, 1)");
  if (horizon < 1) invalid("horizon must be ≥ 1");
  if (rollouts < 1) invalid("rollouts must be ≥ 1");
  if (iterations < 0) invalid("iterations must be ≥ 0");
  if (direction.size() != n || !direction.allFinite() || direction.norm() == 0.0)
    invalid("direction must be a nonzero vector of size nx");
  if (direction_perp.size() != n || !direction_perp.allFinite()) invalid("direction_perp must have size nx");
  if (std::abs(direction.dot(direction_perp)) > 1e-12 * direction.norm() * (1.0 + direction_perp.norm()))
    invalid("direction_perp must be orthogonal to direction");
  if (!(state_weight > 0.0) || !(input_weight > 0.0)) invalid("weights must be positive");
  if (t_max < 1) invalid("t_max must be ≥ 1");
  if (evaluation_rollouts < 0) invalid("evaluation_rollouts must be ≥ 0");
  if (threads < 1) invalid("threads must be ≥ 1");
  if (bootstrap_max_leaves < 1) invalid("bootstrap_max_leaves must be ≥ 1");
  if (!(probe_tol > 0.0)) invalid("probe_tol must be positive");
  if (mode == Mode::CostStudy) {
    if (!x0) invalid("cost-study needs x0");
    if (x0->size() != n || !x0->allFinite()) invalid("x0 must have size nx");
    if (!contains(system.X, *x0, 0.0)) invalid("x0 must lie in X");
  }
  if (mode == Mode::EpsilonGamma) {
    if (eg_rollout_counts.empty()) invalid("epsilon_gamma.rollout_counts is empty");
    for (std::size_t i = 0; i < eg_rollout_counts.size(); ++i) {
      if (eg_rollout_counts[i] < 1) invalid("epsilon_gamma.rollout_counts must be positive");
      if (i > 0 && eg_rollout_counts[i] <= eg_rollout_counts[i - 1])
        invalid("epsilon_gamma.rollout_counts must be increasing");
    }
    if (eg_monte_carlo < 1) invalid("epsilon_gamma.monte_carlo must be ≥ 1");
  }
}

CampaignConfig config_from_json(const Json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  reject_unknown(j, kTopKeys, "");
  const Mode mode = mode_from_string(get<std::string>(j, "mode", "explore"));
  CampaignConfig c = benchmark_config(mode);
  if (j.contains("system")) c.system = system_from_json(j.at("system"), c.system);
  if (j.contains("lqr")) {
    const Json& l = j.at("lqr");
    reject_unknown(l, {"Q", "R"}, "lqr.");
    c.lqr_Q = get_mat(l, "Q", c.lqr_Q);
    c.lqr_R = get_mat(l, "R", c.lqr_R);
  }
  c.mrpi_contraction = get<double>(j, "mrpi_contraction", c.mrpi_contraction);
  c.horizon = get<int>(j, "horizon", c.horizon);
  c.rollouts = get<int>(j, "rollouts", c.rollouts);
  c.iterations = get<int>(j, "iterations", c.iterations);
  c.direction = get_vec(j, "direction", c.direction);
  c.direction_perp = get_vec(j, "direction_perp", c.direction_perp);
  if (j.contains("weights")) {
    const Vec w = get_vec(j, "weights", Vec());
    if (w.size() != 2) invalid("weights must be [q_x, q_u]");
    c.state_weight = w[0];
    c.input_weight = w[1];
  }
  c.master_seed = get<std::uint64_t>(j, "master_seed", c.master_seed);
  c.t_max = get<int>(j, "t_max", c.t_max);
  if (j.contains("x0")) c.x0 = get_vec(j, "x0", Vec());
  c.evaluation_rollouts = get<int>(j, "evaluation_rollouts", c.evaluation_rollouts);
  c.threads = get<int>(j, "threads", c.threads);
  c.output_dir = get<std::string>(j, "output_dir", c.output_dir);
  c.bootstrap_max_leaves = get<int>(j, "bootstrap_max_leaves", c.bootstrap_max_leaves);
  c.probe_tol = get<double>(j, "probe_tol", c.probe_tol);
  if (j.contains("epsilon_gamma")) {
    const Json& e = j.at("epsilon_gamma");
    reject_unknown(e, {"rollout_counts", "monte_carlo"}, "epsilon_gamma.");
    c.eg_rollout_counts = get<std::vector<int>>(e, "rollout_counts", c.eg_rollout_counts);
    c.eg_monte_carlo = get<int>(e, "monte_carlo", c.eg_monte_carlo);
  }
  c.validate();
  return c;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    invalid(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

Json to_json(const CampaignConfig& c) {
  Json j;
  j["system"] = {{"A", to_json(c.system.A)},
                 {"B", to_json(c.system.B)},
                 {"W", to_json(c.system.W)},
                 {"X", to_json(c.system.X)},
                 {"U", to_json(c.system.U)}};
  j["lqr"] = {{"Q", to_json(c.lqr_Q)}, {"R", to_json(c.lqr_R)}};
  j["mrpi_contraction"] = c.mrpi_contraction;
  j["horizon"] = c.horizon;
  j["rollouts"] = c.rollouts;
  j["iterations"] = c.iterations;
  j["direction"] = to_json(c.direction);
  j["direction_perp"] = to_json(c.direction_perp);
  j["weights"] = {c.state_weight, c.input_weight};
  j["master_seed"] = c.master_seed;
  j["t_max"] = c.t_max;
  j["mode"] = to_string(c.mode);
  if (c.x0) j["x0"] = to_json(*c.x0);
  j["evaluation_rollouts"] = c.evaluation_rollouts;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["bootstrap_max_leaves"] = c.bootstrap_max_leaves;
  j["probe_tol"] = c.probe_tol;
  j["epsilon_gamma"] = {{"rollout_counts", c.eg_rollout_counts}, {"monte_carlo", c.eg_monte_carlo}};
  return j;
}

}  // namespace lmpc
