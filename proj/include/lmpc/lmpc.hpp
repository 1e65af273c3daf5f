#pragma once

#include <memory>
#include <vector>

#include "lmpc/value_fn.hpp"

namespace lmpc {

inline constexpr long kMaxLeaves = 1000000;

/// Non-anticipative scenario tree over the vertices of W. Nodes are stored
/// breadth first; depth k holds m^k nodes, each carrying one input.
struct ScenarioTree {
  struct Node {
    int depth = 0;
    int parent = -1;  // node index; −1 for the root
    int branch = -1;  // disturbance index on the edge from the parent
  };

  int horizon = 0;
  std::vector<Vec> disturbances;
  std::vector<Node> nodes;
  std::vector<Node> leaves;  // depth = horizon, parent at depth horizon − 1

  int m() const { return static_cast<int>(disturbances.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_leaves() const { return static_cast<int>(leaves.size()); }
  /// Node indices from the root to the parent of `leaf`.
  std::vector<int> leaf_path(int leaf) const;
  /// Disturbance indices along the path to `leaf`.
  std::vector<int> leaf_branches(int leaf) const;
};

ScenarioTree build_scenario_tree(int horizon, const Box& W);

struct FtocpSolution {
  LpStatus status = LpStatus::Infeasible;
  double worst_case_cost = kInf;
  Vec root_input;
  std::vector<Vec> node_inputs;
  std::vector<Vec> leaf_states;
  int rounds = 0;
  int lp_iterations = 0;
};

/// min over node inputs of the worst leaf cost Σ h + Q̃(x_N), with X and U on
/// every node and x_N ∈ dom Q̃. One row-generation LP per instance: constraint,
/// distance and terminal rows are added when violated and kept across calls,
/// so consecutive solves at nearby states start warm.
class FtocpSolver {
 public:
  FtocpSolver(const LtiSystem& sys, const StageCost& cost, std::shared_ptr<const QFunction> q, ScenarioTree tree);
  ~FtocpSolver();
  FtocpSolver(FtocpSolver&&) noexcept;
  FtocpSolver& operator=(FtocpSolver&&) noexcept;
  FtocpSolver(const FtocpSolver&);
  FtocpSolver& operator=(const FtocpSolver&);

  FtocpSolution solve(const Vec& x_t);
  /// Drops every lazily added row.
  void reset();

  const ScenarioTree& tree() const;
  int lp_rows() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

FtocpSolution solve_ftocp(const ScenarioTree& tree, const LtiSystem& sys, const StageCost& cost,
                          std::shared_ptr<const QFunction> q, const Vec& x_t);

/// Root input of the FTOCP; throws PolicyInfeasibleError when it has no solution.
Vec policy(FtocpSolver& solver, const Vec& x_t);

/// Receding-horizon controller. reset() restores the solver captured at
/// construction, so every roll-out starts from the same LP state.
class LmpcController : public Controller {
 public:
  explicit LmpcController(const FtocpSolver& prototype) : prototype_(prototype), solver_(prototype) {}
  Vec input(const Vec& x) override;
  void reset() override { solver_ = prototype_; }
  /// Solution behind the most recent input.
  const FtocpSolution& last() const { return last_; }

 private:
  FtocpSolver prototype_;
  FtocpSolver solver_;
  FtocpSolution last_;
};

/// Each controller copies `prototype`, typically warmed by one solve at x₀.
ControllerFactory lmpc_controller_factory(std::shared_ptr<const FtocpSolver> prototype);

struct ProbeResult {
  Vec x0;
  double distance = 0.0;  // s along the unit direction
  int solves = 0;
};

/// Largest s with s·â feasible, â = a/‖a‖, by bisection on [0, s_max] where
/// s_max clips the ray to X. Throws NoFeasiblePoint if the origin fails.
ProbeResult frontier_probe(FtocpSolver& solver, const LtiSystem& sys, const Vec& a, const Vec& a_perp,
                           double tol = 1e-3, int max_iterations = 40);

}  // namespace lmpc
