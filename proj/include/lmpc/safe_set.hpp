#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "lmpc/plant.hpp"

namespace lmpc {

inline constexpr double kGoalTol = 1e-7;
inline constexpr int kDefaultTmax = 100;

/// One stored closed-loop trajectory x₀..x_T, u₀..u_{T−1}; x_T is the first state in O.
struct RolloutRecord {
  int iteration = 0;
  int index = 0;
  std::uint64_t seed = 0;
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  int time_to_goal = 0;
  std::vector<double> cost_to_go;  // filled by realized_cost_to_go

  double total_cost() const { return cost_to_go.empty() ? 0.0 : cost_to_go.front(); }
};

/// A state-feedback law. Instances may keep solver workspace, so each roll-out
/// worker owns its own.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Vec input(const Vec& x) = 0;
  /// Called before every roll-out so results do not depend on which roll-outs a worker ran before.
  virtual void reset() {}
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

class LinearFeedback : public Controller {
 public:
  explicit LinearFeedback(Mat K) : K_(std::move(K)) {}
  Vec input(const Vec& x) override { return K_ * x; }

 private:
  Mat K_;
};

/// Simulates until the state enters O; throws RolloutDiverged after t_max steps.
RolloutRecord simulate_rollout(const LtiSystem& sys, const GoalSetData& goal, Controller& controller, const Vec& x0,
                               Rng& rng, int t_max = kDefaultTmax);

/// Max violation of x ∈ X / u ∈ U over a roll-out (0 when admissible).
double constraint_violation(const LtiSystem& sys, const RolloutRecord& r);

/// max over k of the distance of the implied disturbance x_{k+1} − A x_k − B u_k from W (∞-norm excess).
double consistency_violation(const LtiSystem& sys, const RolloutRecord& r);

/// R̃₀..R̃_K, K = longest time to goal; roll-outs stop contributing after their own T.
struct SampledReachSets {
  int iteration = 0;
  int rollout_count = 0;
  std::vector<VPolytope> sets;
};

SampledReachSets build_reach_sets(const std::vector<RolloutRecord>& rollouts);

struct Provenance {
  int iteration = -1;  // −1 for vertices of O
  int step = -1;
};

/// Convex hull of O and all sampled reachable sets so far, with per-vertex provenance.
class ConvexSafeSetApprox {
 public:
  ConvexSafeSetApprox() = default;
  static ConvexSafeSetApprox from_goal(const GoalSetData& goal);

  const VPolytope& hull() const { return hull_; }
  const std::vector<Provenance>& provenance() const { return provenance_; }
  /// H-rep of the hull (2D only; empty otherwise).
  const HPolytope& hrep() const { return hrep_; }
  int dim() const { return hull_.dim(); }
  int size() const { return hull_.size(); }
  bool contains(const Vec& x, double tol = kDedupTol) const;

  friend ConvexSafeSetApprox update_convex_safe_set(const ConvexSafeSetApprox& prev, const SampledReachSets& sets,
                                                    const GoalSetData& goal);

 private:
  void set_points(const Mat& points, const std::vector<Provenance>& labels);

  VPolytope hull_;
  std::vector<Provenance> provenance_;
  HPolytope hrep_;
};

ConvexSafeSetApprox update_convex_safe_set(const ConvexSafeSetApprox& prev, const SampledReachSets& sets,
                                           const GoalSetData& goal);

/// Binomial proportion with a 95% Wilson score interval.
struct Proportion {
  long events = 0;
  long trials = 0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

Proportion wilson_interval(long events, long trials, double z = 1.959963984540054);

/// Transitions x_k ∈ cs → x_{k+1} ∉ cs over transitions with x_k ∈ cs.
Proportion estimate_epsilon(const ConvexSafeSetApprox& cs, const std::vector<RolloutRecord>& rollouts);

/// Deterministic stream per roll-out: rollout i uses Rng(seed_of(i)).
std::vector<RolloutRecord> simulate_rollouts(const LtiSystem& sys, const GoalSetData& goal,
                                             const ControllerFactory& make_controller, const Vec& x0, int count,
                                             const std::function<std::uint64_t(int)>& seed_of, int threads,
                                             int t_max = kDefaultTmax, int iteration = 0);

/// Runs M fresh roll-outs under the policy and applies the transition estimator above.
Proportion estimate_epsilon(const ConvexSafeSetApprox& cs, const LtiSystem& sys, const GoalSetData& goal,
                            const ControllerFactory& make_controller, const Vec& x0, int M, std::uint64_t seed,
                            int threads = 1, int t_max = kDefaultTmax);

}  // namespace lmpc
