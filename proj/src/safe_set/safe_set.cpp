#include "lmpc/safe_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmpc/parallel.hpp"

namespace lmpc {

RolloutRecord simulate_rollout(const LtiSystem& sys, const GoalSetData& goal, Controller& controller, const Vec& x0,
                               Rng& rng, int t_max) {
  RolloutRecord r;
  r.states.push_back(x0);
  Vec x = x0;
  controller.reset();
  while (!goal.in_goal(x, kGoalTol)) {
    if (static_cast<int>(r.inputs.size()) >= t_max) {
      throw Error(ErrorCode::RolloutDiverged, "roll-out did not reach the goal set within " + std::to_string(t_max) + " steps");
    }
    const Vec u = controller.input(x);
    const Vec w = sample_disturbance(sys, rng);
    x = step(sys, x, u, w);
    r.inputs.push_back(u);
    r.states.push_back(x);
  }
  r.time_to_goal = static_cast<int>(r.inputs.size());
  return r;
}

double constraint_violation(const LtiSystem& sys, const RolloutRecord& r) {
  double worst = 0.0;
  for (const Vec& x : r.states) worst = std::max(worst, (sys.X.A * x - sys.X.b).maxCoeff());
  for (const Vec& u : r.inputs) worst = std::max(worst, (sys.U.A * u - sys.U.b).maxCoeff());
  return worst;
}

double consistency_violation(const LtiSystem& sys, const RolloutRecord& r) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < r.states.size(); ++k) {
    const Vec w = r.states[k + 1] - sys.A * r.states[k] - sys.B * r.inputs[k];
    worst = std::max(worst, ((w - sys.W.center).cwiseAbs() - sys.W.radius).maxCoeff());
  }
  return worst;
}

SampledReachSets build_reach_sets(const std::vector<RolloutRecord>& rollouts) {
  if (rollouts.empty()) throw Error(ErrorCode::EmptyInput, "no roll-outs");
  SampledReachSets out;
  out.iteration = rollouts.front().iteration;
  out.rollout_count = static_cast<int>(rollouts.size());
  const int dim = static_cast<int>(rollouts.front().states.front().size());
  int horizon = 0;
  for (const auto& r : rollouts) {
    if (r.states.empty() || r.time_to_goal + 1 != static_cast<int>(r.states.size())) {
      throw Error(ErrorCode::IncompleteRollout, "roll-out state count does not match its time to goal");
    }
    horizon = std::max(horizon, r.time_to_goal);
  }
  for (int k = 0; k <= horizon; ++k) {
    std::vector<Vec> pts;
    for (const auto& r : rollouts) {
      if (k <= r.time_to_goal) pts.push_back(r.states[k]);
    }
    Mat m(dim, static_cast<int>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<int>(i)) = pts[i];
    out.sets.push_back(convex_hull(m));
  }
  return out;
}

void ConvexSafeSetApprox::set_points(const Mat& points, const std::vector<Provenance>& labels) {
  hull_ = convex_hull(points);
  provenance_.assign(hull_.size(), Provenance{});
  for (int i = 0; i < hull_.size(); ++i) {
    // The hull returns input points, so the first one within the dedupe tolerance is the source.
    for (int j = 0; j < points.cols(); ++j) {
      if ((points.col(j) - hull_.vertices.col(i)).cwiseAbs().maxCoeff() <= kDedupTol) {
        provenance_[i] = labels[j];
        break;
      }
    }
  }
  hrep_ = hull_.dim() == 2 ? to_hrep_2d(hull_) : HPolytope{};
}

ConvexSafeSetApprox ConvexSafeSetApprox::from_goal(const GoalSetData& goal) {
  ConvexSafeSetApprox cs;
  cs.set_points(goal.O.vertices, std::vector<Provenance>(goal.O.size()));
  return cs;
}

bool ConvexSafeSetApprox::contains(const Vec& x, double tol) const {
  if (hull_.dim() == 2) return lmpc::contains(hrep_, x, tol);
  return lmpc::contains(hull_, x, tol);
}

ConvexSafeSetApprox update_convex_safe_set(const ConvexSafeSetApprox& prev, const SampledReachSets& sets,
                                           const GoalSetData& goal) {
  std::vector<Vec> pts;
  std::vector<Provenance> labels;
  // Goal vertices first, then earlier vertices, so ties keep the oldest provenance.
  for (int i = 0; i < goal.O.size(); ++i) {
    pts.push_back(goal.O.vertex(i));
    labels.push_back({});
  }
  for (int i = 0; i < prev.size(); ++i) {
    pts.push_back(prev.hull().vertex(i));
    labels.push_back(prev.provenance()[i]);
  }
  for (std::size_t k = 0; k < sets.sets.size(); ++k) {
    const VPolytope& r = sets.sets[k];
    for (int i = 0; i < r.size(); ++i) {
      pts.push_back(r.vertex(i));
      labels.push_back({sets.iteration, static_cast<int>(k)});
    }
  }
  Mat m(goal.O.dim(), static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<int>(i)) = pts[i];
  ConvexSafeSetApprox cs;
  cs.set_points(m, labels);
  return cs;
}

Proportion wilson_interval(long events, long trials, double z) {
  Proportion p;
  p.events = events;
  p.trials = trials;
  if (trials <= 0) return p;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(events) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  p.estimate = phat;
  p.lower = std::max(0.0, center - half);
  p.upper = std::min(1.0, center + half);
  return p;
}

Proportion estimate_epsilon(const ConvexSafeSetApprox& cs, const std::vector<RolloutRecord>& rollouts) {
  long events = 0;
  long trials = 0;
  for (const auto& r : rollouts) {
    bool inside = cs.contains(r.states.front());
    for (std::size_t k = 0; k + 1 < r.states.size(); ++k) {
      const bool next = cs.contains(r.states[k + 1]);
      if (inside) {
        ++trials;
        if (!next) ++events;
      }
      inside = next;
    }
  }
  return wilson_interval(events, trials);
}

std::vector<RolloutRecord> simulate_rollouts(const LtiSystem& sys, const GoalSetData& goal,
                                             const ControllerFactory& make_controller, const Vec& x0, int count,
                                             const std::function<std::uint64_t(int)>& seed_of, int threads, int t_max,
                                             int iteration) {
  std::vector<RolloutRecord> out(count);
  const int workers = std::max(1, std::min(threads, count));
  std::vector<std::unique_ptr<Controller>> controllers(workers);
  parallel_for(count, workers, [&](int w, int i) {
    if (!controllers[w]) controllers[w] = make_controller();
    const std::uint64_t seed = seed_of(i);
    Rng rng(seed);
    RolloutRecord r = simulate_rollout(sys, goal, *controllers[w], x0, rng, t_max);
    r.iteration = iteration;
    r.index = i;
    r.seed = seed;
    out[i] = std::move(r);
  });
  return out;
}

Proportion estimate_epsilon(const ConvexSafeSetApprox& cs, const LtiSystem& sys, const GoalSetData& goal,
                            const ControllerFactory& make_controller, const Vec& x0, int M, std::uint64_t seed,
                            int threads, int t_max) {
  const auto rollouts = simulate_rollouts(
      sys, goal, make_controller, x0, M, [seed](int i) { return derive_seed({seed, static_cast<std::uint64_t>(i)}); },
      threads, t_max);
  return estimate_epsilon(cs, rollouts);
}

}  // namespace lmpc
