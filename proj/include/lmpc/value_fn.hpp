#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "lmpc/safe_set.hpp"

namespace lmpc {

inline constexpr double kGammaTol = 1e-6;

/// J̃_k = Σ_{t=k}^{T} h(x_t, u_t) with u_T = K x_T. Throws IncompleteRollout if x_T ∉ O.
std::vector<double> realized_cost_to_go(const RolloutRecord& rollout, const StageCost& cost);

/// a·x + b ≥ J̃ at every sample of step k.
struct CostHyperplane {
  int iteration = 0;
  int step = 0;
  Vec a;
  double b = 0.0;
  double residual = 0.0;
  int samples = 0;
};

/// Least-squares plane over the samples subject to dominating every one of them.
CostHyperplane fit_upper_hyperplane(const std::vector<Vec>& states, const std::vector<double>& costs);

/// One plane per step k = 0..max T, fitted on roll-outs with k ≤ T. Needs cost_to_go filled.
std::vector<CostHyperplane> fit_step_hyperplanes(const std::vector<RolloutRecord>& rollouts);

struct TerminalPoint {
  Vec vertex;
  double cost = 0.0;
  int iteration = -1;  // −1 for vertices of O
  int step = -1;
};

/// Vertex/cost pairs generating the convexified cost-to-go.
struct TerminalData {
  std::vector<TerminalPoint> points;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().vertex.size()); }
  int size() const { return static_cast<int>(points.size()); }
  Mat vertices() const;
};

TerminalData terminal_data_from_goal(const GoalSetData& goal);
/// Appends every vertex of every R̃_k at cost max(0, a_k·v + b_k).
TerminalData extend_terminal_data(const TerminalData& prev, const SampledReachSets& sets,
                                  const std::vector<CostHyperplane>& planes);

/// value = slope·x + offset
struct AffinePiece {
  Vec slope;
  double offset = 0.0;

  double operator()(const Vec& x) const { return slope.dot(x) + offset; }
};

struct QValue {
  double value = 0.0;
  AffinePiece support;  // global minorant of Q̃, tight at the evaluated point
};

/// min Σλₛcₛ over λ ≥ 0, Σλₛvₛ = x, Σλₛ = 1; nullopt when x is outside conv(vₛ).
std::optional<double> eval_Q(const TerminalData& td, const Vec& x);
/// Same LP; the supporting plane comes from the equality multipliers.
std::optional<QValue> eval_Q_with_support(const TerminalData& td, const Vec& x);

/// Q̃ as the lower convex envelope of the terminal pairs. In 2D the envelope
/// facets are enumerated once and evaluation is a max over them; otherwise (or
/// if the enumeration does not tile the domain) evaluation goes through the LP.
class QFunction {
 public:
  struct Facet {
    AffinePiece plane;
    std::vector<int> polygon;  // indices into the merged points, counter-clockwise
  };

  QFunction() = default;
  explicit QFunction(TerminalData td);

  const TerminalData& data() const { return td_; }
  const std::vector<Facet>& facets() const { return facets_; }
  /// conv of the terminal vertices (2D only; empty otherwise).
  const HPolytope& domain() const { return domain_; }
  bool exact() const { return exact_; }
  bool in_domain(const Vec& x, double tol = 1e-9) const;

  std::optional<double> operator()(const Vec& x) const;
  std::optional<QValue> evaluate(const Vec& x) const;
  /// Index and value of the largest facet plane at x, without a domain test. Needs exact().
  std::pair<int, double> max_facet(const Vec& x) const;

 private:
  void enumerate_facets();

  TerminalData td_;
  Mat points_;  // merged positions, one column per distinct vertex
  Vec costs_;
  std::vector<Facet> facets_;
  HPolytope domain_;
  bool exact_ = false;
};

/// Transitions from x ∈ dom Q̃ that either leave the domain or violate
/// Q̃(x₊) + h(x, u) − Q̃(x) ≤ γ_tol, over all transitions starting in the domain.
Proportion estimate_gamma(const QFunction& q, const StageCost& cost, const std::vector<RolloutRecord>& rollouts,
                          double gamma_tol = kGammaTol);

Proportion estimate_gamma(const QFunction& q, const StageCost& cost, const LtiSystem& sys, const GoalSetData& goal,
                          const ControllerFactory& make_controller, const Vec& x0, int M, std::uint64_t seed,
                          int threads = 1, int t_max = kDefaultTmax, double gamma_tol = kGammaTol);

}  // namespace lmpc
