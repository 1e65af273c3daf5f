#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmpc/json_io.hpp"
#include "lmpc/lmpc.hpp"

namespace lmpc {

enum class Mode { Explore, CostStudy, EpsilonGamma };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

struct CampaignConfig {
  LtiSystem system;
  Mat lqr_Q;
  Mat lqr_R;
  double mrpi_contraction = 0.01;
  int horizon = 3;
  int rollouts = 1000;
  int iterations = 10;
  Vec direction;       // a
  Vec direction_perp;  // a⊥
  double state_weight = 1.0;
  double input_weight = 1.0;
  std::uint64_t master_seed = 0;
  int t_max = kDefaultTmax;
  Mode mode = Mode::Explore;
  std::optional<Vec> x0;  // cost study only
  int evaluation_rollouts = 0;
  int threads = 1;
  std::string output_dir;
  int bootstrap_max_leaves = 256;
  double probe_tol = 1e-3;
  std::vector<int> eg_rollout_counts{100, 1000};
  int eg_monte_carlo = 1000;

  /// Throws Error(ConfigInvalid) naming the first bad field.
  void validate() const;
};

/// Defaults for the double-integrator benchmark in the given mode.
CampaignConfig benchmark_config(Mode mode);

/// Missing keys keep benchmark defaults; unknown keys are rejected.
CampaignConfig config_from_json(const Json& j);
CampaignConfig load_config(const std::filesystem::path& path);
Json to_json(const CampaignConfig& c);

struct IterationReport {
  int iteration = 0;
  std::string controller;  // "lmpc", "tree", "tube"
  int horizon = 0;
  Vec x0;
  double probe_distance = 0.0;
  int probe_solves = 0;
  std::vector<double> rollout_costs;  // J̃₀ per roll-out, by index
  double worst_case_cost = 0.0;
  int rollouts = 0;
  int reached_goal = 0;
  int max_time_to_goal = 0;
  double mean_time_to_goal = 0.0;
  double max_violation = 0.0;
  int evaluation_rollouts = 0;
  int evaluation_reached_goal = 0;
  double evaluation_max_violation = 0.0;
  int evaluation_max_time_to_goal = 0;
  std::optional<Proportion> epsilon;
  std::optional<Proportion> gamma;
  int safe_set_vertices = 0;
  int terminal_points = 0;
  int q_facets = 0;
  double seconds = 0.0;  // wall clock; kept out of report.json
};

/// Everything except wall-clock time, so equal seeds give equal bytes.
Json to_json(const IterationReport& r);
Json to_json(const Proportion& p);
Json to_json(const TerminalData& td);
TerminalData terminal_data_from_json(const Json& j);
Json to_json(const ConvexSafeSetApprox& cs);
Json to_json(const RolloutRecord& r);

/// Nominal tube MPC u = v_k + K(x − z_k), planned once from x₀ with X and U
/// tightened by the error sets R_k = ⊕_{i<k} (A+BK)^i W and z_N = 0. Switches
/// to u = Kx after N steps.
class TubeController : public Controller {
 public:
  TubeController(Mat K, std::vector<Vec> z, std::vector<Vec> v) : K_(std::move(K)), z_(std::move(z)), v_(std::move(v)) {}
  Vec input(const Vec& x) override;
  void reset() override { k_ = 0; }
  int horizon() const { return static_cast<int>(v_.size()); }

 private:
  Mat K_;
  std::vector<Vec> z_;
  std::vector<Vec> v_;
  std::size_t k_ = 0;
};

/// Nominal plan of the shortest feasible horizon up to max_horizon; nullopt if none.
std::optional<TubeController> plan_tube(const LtiSystem& sys, const StageCost& cost, const Vec& x0,
                                        int max_horizon = 100);

struct BootstrapPolicy {
  std::string kind;  // "tree" or "tube"
  int horizon = 0;
  ControllerFactory factory;
};

/// Iteration-0 policy from x₀: the scenario-tree controller on O-only terminal
/// data with the horizon doubled from N while m^N ≤ max_leaves, else the tube.
/// Throws Bootstrap0Infeasible if neither works.
BootstrapPolicy bootstrap_policy(const LtiSystem& sys, const StageCost& cost, const Vec& x0, int horizon,
                                 int max_leaves);

struct EpsilonGammaEntry {
  int rollouts = 0;
  int safe_set_vertices = 0;
  int terminal_points = 0;
  Proportion epsilon;
  Proportion gamma;
};

struct EpsilonGammaReport {
  Vec x0;
  int monte_carlo = 0;
  std::vector<EpsilonGammaEntry> entries;  // by rollout count, ascending
  bool nested = false;  // C̃S¹ of each count contains the previous one
};

Json to_json(const EpsilonGammaReport& r);

/// Learning loop state across iterations.
class Campaign {
 public:
  explicit Campaign(CampaignConfig config);

  const CampaignConfig& config() const { return config_; }
  const LtiSystem& system() const { return config_.system; }
  const GoalSetData& goal() const { return *goal_; }
  const StageCost& cost() const { return cost_; }
  const ConvexSafeSetApprox& safe_set() const { return cs_; }
  const TerminalData& terminal_data() const { return td_; }

  /// Writes iteration directories, summary.csv and (optionally) trace.jsonl under dir.
  void set_output(const std::filesystem::path& dir, bool trace);

  /// Explore: probes x₀ʲ on the current learned data. Cost study: fixed x₀,
  /// with j = 0 run by the bootstrap policy.
  IterationReport run_iteration(int j);
  /// Iterations 1..J (explore) or 0..J (cost study).
  std::vector<IterationReport> run();
  /// Iteration-1 data for every configured rollout count and the Monte-Carlo estimates.
  EpsilonGammaReport run_epsilon_gamma();

  std::uint64_t rollout_seed(int j, int i) const;
  std::uint64_t evaluation_seed(int j, int i) const;

 private:
  void persist(const IterationReport& r, const std::vector<RolloutRecord>& rolls, const SampledReachSets& sets);
  void write_summary() const;
  void trace(const Json& event);

  CampaignConfig config_;
  std::shared_ptr<const GoalSetData> goal_;
  StageCost cost_;
  ScenarioTree tree_;
  ConvexSafeSetApprox cs_;
  TerminalData td_;
  std::vector<IterationReport> reports_;
  std::optional<std::filesystem::path> out_;
  bool trace_ = false;
};

/// Assumption checks on the configured system: robust invariance of O with KO ⊆ U,
/// and positive stage weights with 0 ∈ O, 0 ∈ KO.
struct AssumptionReport {
  bool invariance = false;
  double invariance_margin = 0.0;
  bool input_admissible = false;
  bool cost_bounds = false;
  int mrpi_horizon = 0;
  double mrpi_alpha = 0.0;
  int goal_vertices = 0;

  bool ok() const { return invariance && input_admissible && cost_bounds; }
};

AssumptionReport check_assumptions(const CampaignConfig& config);
Json to_json(const AssumptionReport& r);

/// Q̃ on a grid "xmin:xmax:nx,ymin:ymax:ny" as CSV x,y,Q (inf outside the domain).
std::string q_surface_csv(const QFunction& q, const std::string& grid);

}  // namespace lmpc
