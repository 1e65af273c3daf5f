#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "lmpc/harness.hpp"

namespace lmpc {

namespace {

constexpr std::uint64_t kEvaluationStream = 0xe7a1;

struct RolloutStats {
  int reached = 0;
  int max_time = 0;
  double mean_time = 0.0;
  double max_violation = 0.0;
};

RolloutStats summarize(const LtiSystem& sys, const GoalSetData& goal, const std::vector<RolloutRecord>& rolls) {
  RolloutStats s;
  long total = 0;
  for (const auto& r : rolls) {
    if (goal.in_goal(r.states.back(), kGoalTol)) ++s.reached;
    s.max_time = std::max(s.max_time, r.time_to_goal);
    s.max_violation = std::max(s.max_violation, constraint_violation(sys, r));
    total += r.time_to_goal;
  }
  if (!rolls.empty()) s.mean_time = static_cast<double>(total) / static_cast<double>(rolls.size());
  return s;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigInvalid, "cannot write " + p.string());
  out << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iteration_dir(int j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "iter_%02d", j);
  return buf;
}

}  // namespace

Campaign::Campaign(CampaignConfig config) : config_(std::move(config)) {
  config_.validate();
  goal_ = std::make_shared<const GoalSetData>(
      build_goal_set(config_.system, config_.lqr_Q, config_.lqr_R, config_.mrpi_contraction));
  cost_ = StageCost{config_.state_weight, config_.input_weight, goal_};
  tree_ = build_scenario_tree(config_.horizon, config_.system.W);
  cs_ = ConvexSafeSetApprox::from_goal(*goal_);
  td_ = terminal_data_from_goal(*goal_);
}

void Campaign::set_output(const std::filesystem::path& dir, bool trace) {
  std::filesystem::create_directories(dir);
  out_ = dir;
  trace_ = trace;
  if (trace_) write_text(dir / "trace.jsonl", "");
  write_text(dir / "config.json", to_json(config_).dump(2) + "\n");
}

std::uint64_t Campaign::rollout_seed(int j, int i) const {
  return derive_seed({config_.master_seed, static_cast<std::uint64_t>(config_.mode), static_cast<std::uint64_t>(j),
                      static_cast<std::uint64_t>(i)});
}

std::uint64_t Campaign::evaluation_seed(int j, int i) const {
  return derive_seed({kEvaluationStream, config_.master_seed, static_cast<std::uint64_t>(config_.mode),
                      static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)});
}

void Campaign::trace(const Json& event) {
  if (!out_ || !trace_) return;
  std::ofstream out(*out_ / "trace.jsonl", std::ios::app | std::ios::binary);
  out << event.dump() << "\n";
}

IterationReport Campaign::run_iteration(int j) {
  const auto start = std::chrono::steady_clock::now();
  const LtiSystem& sys = config_.system;
  IterationReport r;
  r.iteration = j;
  ControllerFactory factory;

  if (config_.mode == Mode::CostStudy && j == 0) {
    BootstrapPolicy bp = bootstrap_policy(sys, cost_, *config_.x0, config_.horizon, config_.bootstrap_max_leaves);
    r.controller = bp.kind;
    r.horizon = bp.horizon;
    r.x0 = *config_.x0;
    factory = std::move(bp.factory);
  } else {
    auto q = std::make_shared<const QFunction>(td_);
    r.q_facets = static_cast<int>(q->facets().size());
    auto proto = std::make_shared<FtocpSolver>(sys, cost_, q, tree_);
    if (config_.mode == Mode::CostStudy) {
      r.x0 = *config_.x0;
    } else {
      const ProbeResult probe = frontier_probe(*proto, sys, config_.direction, config_.direction_perp, config_.probe_tol);
      r.x0 = probe.x0;
      r.probe_distance = probe.distance;
      r.probe_solves = probe.solves;
      trace({{"event", "probe"},
             {"iteration", j},
             {"x0", to_json(probe.x0)},
             {"distance", probe.distance},
             {"solves", probe.solves}});
    }
    if (proto->solve(r.x0).status != LpStatus::Optimal)
      throw PolicyInfeasibleError(r.x0, "iteration " + std::to_string(j) + ": initial state is not feasible");
    r.controller = "lmpc";
    r.horizon = config_.horizon;
    factory = lmpc_controller_factory(proto);
  }

  auto rolls = simulate_rollouts(
      sys, *goal_, factory, r.x0, config_.rollouts, [&](int i) { return rollout_seed(j, i); }, config_.threads,
      config_.t_max, j);
  for (auto& roll : rolls) roll.cost_to_go = realized_cost_to_go(roll, cost_);
  r.rollouts = static_cast<int>(rolls.size());
  r.worst_case_cost = 0.0;
  for (const auto& roll : rolls) {
    r.rollout_costs.push_back(roll.total_cost());
    r.worst_case_cost = std::max(r.worst_case_cost, roll.total_cost());
  }
  const RolloutStats st = summarize(sys, *goal_, rolls);
  r.reached_goal = st.reached;
  r.max_time_to_goal = st.max_time;
  r.mean_time_to_goal = st.mean_time;
  r.max_violation = st.max_violation;
  trace({{"event", "rollouts"},
         {"iteration", j},
         {"count", r.rollouts},
         {"worst_case_cost", r.worst_case_cost},
         {"max_time_to_goal", r.max_time_to_goal}});

  if (config_.evaluation_rollouts > 0) {
    const auto eval = simulate_rollouts(
        sys, *goal_, factory, r.x0, config_.evaluation_rollouts, [&](int i) { return evaluation_seed(j, i); },
        config_.threads, config_.t_max, j);
    const RolloutStats es = summarize(sys, *goal_, eval);
    r.evaluation_rollouts = static_cast<int>(eval.size());
    r.evaluation_reached_goal = es.reached;
    r.evaluation_max_violation = es.max_violation;
    r.evaluation_max_time_to_goal = es.max_time;
    trace({{"event", "evaluation"},
           {"iteration", j},
           {"count", r.evaluation_rollouts},
           {"max_violation", es.max_violation},
           {"max_time_to_goal", es.max_time}});
  }

  const SampledReachSets sets = build_reach_sets(rolls);
  td_ = extend_terminal_data(td_, sets, fit_step_hyperplanes(rolls));
  cs_ = update_convex_safe_set(cs_, sets, *goal_);
  r.safe_set_vertices = cs_.size();
  r.terminal_points = td_.size();
  trace({{"event", "update"},
         {"iteration", j},
         {"safe_set_vertices", r.safe_set_vertices},
         {"terminal_points", r.terminal_points}});

  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  reports_.push_back(r);
  persist(r, rolls, sets);
  return r;
}

std::vector<IterationReport> Campaign::run() {
  if (config_.mode == Mode::EpsilonGamma)
    throw Error(ErrorCode::ConfigInvalid, "epsilon-gamma mode runs through run_epsilon_gamma()");
  std::vector<IterationReport> out;
  const int first = config_.mode == Mode::CostStudy ? 0 : 1;
  if (out_ && first == 1) {
    const auto dir = *out_ / iteration_dir(0);
    std::filesystem::create_directories(dir);
    write_text(dir / "safe_set.json", to_json(cs_).dump() + "\n");
    write_text(dir / "terminal_data.json", to_json(td_).dump() + "\n");
  }
  for (int j = first; j <= config_.iterations; ++j) {
    out.push_back(run_iteration(j));
  }
  write_summary();
  return out;
}

EpsilonGammaReport Campaign::run_epsilon_gamma() {
  const LtiSystem& sys = config_.system;
  const int j = 1;
  const auto q0 = std::make_shared<const QFunction>(terminal_data_from_goal(*goal_));
  auto proto = std::make_shared<FtocpSolver>(sys, cost_, q0, tree_);
  const ProbeResult probe = frontier_probe(*proto, sys, config_.direction, config_.direction_perp, config_.probe_tol);
  if (proto->solve(probe.x0).status != LpStatus::Optimal)
    throw PolicyInfeasibleError(probe.x0, "probed initial state is not feasible");
  const ControllerFactory factory = lmpc_controller_factory(proto);

  const int R = config_.eg_rollout_counts.back();
  auto rolls = simulate_rollouts(
      sys, *goal_, factory, probe.x0, R, [&](int i) { return rollout_seed(j, i); }, config_.threads, config_.t_max, j);
  for (auto& roll : rolls) roll.cost_to_go = realized_cost_to_go(roll, cost_);
  const auto eval = simulate_rollouts(
      sys, *goal_, factory, probe.x0, config_.eg_monte_carlo, [&](int i) { return evaluation_seed(j, i); },
      config_.threads, config_.t_max, j);

  EpsilonGammaReport rep;
  rep.x0 = probe.x0;
  rep.monte_carlo = config_.eg_monte_carlo;
  rep.nested = true;
  std::optional<ConvexSafeSetApprox> prev;
  for (int count : config_.eg_rollout_counts) {
    const std::vector<RolloutRecord> sub(rolls.begin(), rolls.begin() + count);
    const SampledReachSets sets = build_reach_sets(sub);
    const ConvexSafeSetApprox cs = update_convex_safe_set(ConvexSafeSetApprox::from_goal(*goal_), sets, *goal_);
    const TerminalData td = extend_terminal_data(terminal_data_from_goal(*goal_), sets, fit_step_hyperplanes(sub));
    const QFunction q(td);
    EpsilonGammaEntry e;
    e.rollouts = count;
    e.safe_set_vertices = cs.size();
    e.terminal_points = td.size();
    e.epsilon = estimate_epsilon(cs, eval);
    e.gamma = estimate_gamma(q, cost_, eval);
    rep.entries.push_back(e);
    if (prev)
      for (int v = 0; v < prev->size(); ++v)
        if (!cs.contains(prev->hull().vertex(v))) rep.nested = false;
    prev = cs;
    trace({{"event", "epsilon_gamma"},
           {"rollouts", count},
           {"epsilon", to_json(e.epsilon)},
           {"gamma", to_json(e.gamma)}});
    if (out_) {
      const auto dir = *out_ / ("rollouts_" + std::to_string(count));
      std::filesystem::create_directories(dir);
      write_text(dir / "safe_set.json", to_json(cs).dump() + "\n");
      write_text(dir / "terminal_data.json", to_json(td).dump() + "\n");
    }
  }
  if (out_) write_text(*out_ / "epsilon_gamma.json", to_json(rep).dump(2) + "\n");
  return rep;
}

void Campaign::persist(const IterationReport& r, const std::vector<RolloutRecord>& rolls,
                       const SampledReachSets& sets) {
  if (!out_) return;
  const auto dir = *out_ / iteration_dir(r.iteration);
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const auto& roll : rolls) lines += to_json(roll).dump() + "\n";
  write_text(dir / "rollouts.jsonl", lines);
  write_text(dir / "safe_set.json", to_json(cs_).dump() + "\n");
  write_text(dir / "terminal_data.json", to_json(td_).dump() + "\n");
  write_text(dir / "report.json", to_json(r).dump(2) + "\n");
  write_text(dir / "timing.json", Json{{"seconds", r.seconds}}.dump() + "\n");
  std::string csv = "x,y,k,iteration\n";
  for (std::size_t k = 0; k < sets.sets.size(); ++k) {
    const VPolytope& s = sets.sets[k];
    for (int v = 0; v < s.size(); ++v) {
      for (int d = 0; d < s.dim(); ++d) csv += fmt(s.vertices(d, v)) + ",";
      csv += std::to_string(k) + "," + std::to_string(r.iteration) + "\n";
    }
  }
  write_text(dir / "reach_sets.csv", csv);
  write_summary();
}

void Campaign::write_summary() const {
  if (!out_) return;
  std::string csv =
      "iteration,controller,horizon,x0_1,x0_2,worst_case_cost,rollouts,reached_goal,max_time_to_goal,"
      "max_violation,evaluation_rollouts,evaluation_reached_goal,safe_set_vertices,terminal_points\n";
  for (const auto& r : reports_) {
    csv += std::to_string(r.iteration) + "," + r.controller + "," + std::to_string(r.horizon) + "," + fmt(r.x0[0]) +
           "," + fmt(r.x0.size() > 1 ? r.x0[1] : 0.0) + "," + fmt(r.worst_case_cost) + "," +
           std::to_string(r.rollouts) + "," + std::to_string(r.reached_goal) + "," +
           std::to_string(r.max_time_to_goal) + "," + fmt(r.max_violation) + "," +
           std::to_string(r.evaluation_rollouts) + "," + std::to_string(r.evaluation_reached_goal) + "," +
           std::to_string(r.safe_set_vertices) + "," + std::to_string(r.terminal_points) + "\n";
  }
  write_text(*out_ / "summary.csv", csv);
}

AssumptionReport check_assumptions(const CampaignConfig& config) {
  config.validate();
  const GoalSetData g = build_goal_set(config.system, config.lqr_Q, config.lqr_R, config.mrpi_contraction);
  const LtiSystem& sys = config.system;
  AssumptionReport r;
  r.invariance_margin = invariance_violation(sys.A + sys.B * g.K, sys.W, g.O);
  r.invariance = r.invariance_margin <= 1e-8;
  r.input_admissible = true;
  for (int v = 0; v < g.O.size(); ++v)
    if (!contains(sys.U, Vec(g.K * g.O.vertex(v)), 1e-9)) r.input_admissible = false;
  const Vec zx = Vec::Zero(sys.nx());
  const Vec zu = Vec::Zero(sys.nu());
  r.cost_bounds =
      config.state_weight > 0.0 && config.input_weight > 0.0 && contains(g.O_hrep, zx, 0.0) && contains(g.KO, zu);
  r.mrpi_horizon = g.mrpi_horizon;
  r.mrpi_alpha = g.mrpi_alpha;
  r.goal_vertices = g.O.size();
  return r;
}

}  // namespace lmpc
