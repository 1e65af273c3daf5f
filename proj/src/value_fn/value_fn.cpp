#include "lmpc/value_fn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace lmpc {

std::vector<double> realized_cost_to_go(const RolloutRecord& rollout, const StageCost& cost) {
  if (!cost.goal) throw Error(ErrorCode::EmptyInput, "stage cost without goal set");
  const std::size_t T = rollout.inputs.size();
  if (rollout.states.size() != T + 1 || !cost.goal->in_goal(rollout.states.back(), kGoalTol)) {
    throw Error(ErrorCode::IncompleteRollout, "roll-out does not end in the goal set");
  }
  std::vector<double> J(T + 1);
  const Vec& xT = rollout.states.back();
  J[T] = stage_cost(cost, xT, cost.goal->K * xT);
  for (std::size_t k = T; k-- > 0;) J[k] = J[k + 1] + stage_cost(cost, rollout.states[k], rollout.inputs[k]);
  return J;
}

CostHyperplane fit_upper_hyperplane(const std::vector<Vec>& states, const std::vector<double>& costs) {
  if (states.empty()) throw Error(ErrorCode::EmptyInput, "no samples for the cost hyperplane");
  if (states.size() != costs.size()) throw Error(ErrorCode::DimensionMismatch, "samples and costs differ in count");
  const int n = static_cast<int>(states.front().size());
  const int m = static_cast<int>(states.size());
  ConstrainedLsProblem p;
  p.design.resize(m, n + 1);
  p.target.resize(m);
  for (int i = 0; i < m; ++i) {
    if (states[i].size() != n) throw Error(ErrorCode::DimensionMismatch, "sample dimension");
    p.design.row(i).head(n) = states[i].transpose();
    p.design(i, n) = 1.0;
    p.target[i] = costs[i];
  }
  p.G = p.design;
  p.h = p.target;
  Vec start = Vec::Zero(n + 1);
  start[n] = p.target.maxCoeff();
  const ClsResult r = solve_cls(p, start);
  CostHyperplane out;
  out.a = r.z.head(n);
  out.b = r.z[n];
  out.residual = r.residual;
  out.samples = m;
  return out;
}

std::vector<CostHyperplane> fit_step_hyperplanes(const std::vector<RolloutRecord>& rollouts) {
  if (rollouts.empty()) throw Error(ErrorCode::EmptyInput, "no roll-outs");
  int horizon = 0;
  for (const auto& r : rollouts) {
    if (r.cost_to_go.size() != r.states.size()) {
      throw Error(ErrorCode::IncompleteRollout, "roll-out without cost-to-go");
    }
    horizon = std::max(horizon, r.time_to_goal);
  }
  std::vector<CostHyperplane> planes;
  for (int k = 0; k <= horizon; ++k) {
    std::vector<Vec> xs;
    std::vector<double> js;
    for (const auto& r : rollouts) {
      if (k > r.time_to_goal) continue;
      xs.push_back(r.states[k]);
      js.push_back(r.cost_to_go[k]);
    }
    CostHyperplane h = fit_upper_hyperplane(xs, js);
    h.iteration = rollouts.front().iteration;
    h.step = k;
    planes.push_back(std::move(h));
  }
  return planes;
}

Mat TerminalData::vertices() const {
  Mat m(dim(), size());
  for (int i = 0; i < size(); ++i) m.col(i) = points[i].vertex;
  return m;
}

TerminalData terminal_data_from_goal(const GoalSetData& goal) {
  TerminalData td;
  for (int i = 0; i < goal.O.size(); ++i) td.points.push_back({goal.O.vertex(i), 0.0, -1, -1});
  return td;
}

TerminalData extend_terminal_data(const TerminalData& prev, const SampledReachSets& sets,
                                  const std::vector<CostHyperplane>& planes) {
  if (planes.size() < sets.sets.size()) throw Error(ErrorCode::DimensionMismatch, "fewer planes than reach sets");
  TerminalData td = prev;
  for (std::size_t k = 0; k < sets.sets.size(); ++k) {
    const CostHyperplane& h = planes[k];
    for (int i = 0; i < sets.sets[k].size(); ++i) {
      const Vec v = sets.sets[k].vertex(i);
      td.points.push_back({v, std::max(0.0, h.a.dot(v) + h.b), sets.iteration, static_cast<int>(k)});
    }
  }
  return td;
}

namespace {

std::optional<QValue> q_lp(const Mat& V, const Vec& c, const Vec& x) {
  const int d = static_cast<int>(V.rows());
  const int s = static_cast<int>(V.cols());
  if (s == 0) throw Error(ErrorCode::EmptyInput, "empty terminal data");
  if (x.size() != d) throw Error(ErrorCode::DimensionMismatch, "Q evaluation point");
  LinearProgram lp;
  lp.cost = c;
  lp.G.resize(0, s);
  lp.h.resize(0);
  lp.F.resize(d + 1, s);
  lp.F.topRows(d) = V;
  lp.F.row(d).setOnes();
  lp.g.resize(d + 1);
  lp.g << x, 1.0;
  lp.lower = Vec::Zero(s);
  lp.upper = Vec::Constant(s, kInf);
  const LpSolution sol = solve_lp(lp, LpMethod::Primal);
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  QValue q;
  q.value = sol.objective;
  q.support.slope = -sol.eq_dual.head(d);
  q.support.offset = -sol.eq_dual[d];
  return q;
}

// Plane through three points of (x, c) space.
std::optional<AffinePiece> plane_through(const Vec& p0, double c0, const Vec& p1, double c1, const Vec& p2,
                                         double c2) {
  Eigen::Matrix3d M;
  M << p0[0], p0[1], 1.0, p1[0], p1[1], 1.0, p2[0], p2[1], 1.0;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::Vector3d th = lu.solve(Eigen::Vector3d(c0, c1, c2));
  AffinePiece a;
  a.slope = th.head<2>();
  a.offset = th[2];
  return a;
}

}  // namespace

std::optional<QValue> eval_Q_with_support(const TerminalData& td, const Vec& x) {
  Vec c(td.size());
  for (int i = 0; i < td.size(); ++i) c[i] = td.points[i].cost;
  return q_lp(td.vertices(), c, x);
}

std::optional<double> eval_Q(const TerminalData& td, const Vec& x) {
  const auto q = eval_Q_with_support(td, x);
  if (!q) return std::nullopt;
  return q->value;
}

QFunction::QFunction(TerminalData td) : td_(std::move(td)) {
  if (td_.size() == 0) throw Error(ErrorCode::EmptyInput, "empty terminal data");
  const int d = td_.dim();
  std::vector<int> order(td_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec& u = td_.points[a].vertex;
    const Vec& v = td_.points[b].vertex;
    return std::lexicographical_compare(u.data(), u.data() + d, v.data(), v.data() + d);
  });
  std::vector<Vec> pts;
  std::vector<double> cs;
  for (int i : order) {
    const TerminalPoint& p = td_.points[i];
    if (!pts.empty() && (pts.back() - p.vertex).cwiseAbs().maxCoeff() <= kDedupTol) {
      cs.back() = std::min(cs.back(), p.cost);
      continue;
    }
    pts.push_back(p.vertex);
    cs.push_back(p.cost);
  }
  points_.resize(d, static_cast<int>(pts.size()));
  costs_.resize(static_cast<int>(cs.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    points_.col(static_cast<int>(i)) = pts[i];
    costs_[static_cast<int>(i)] = cs[i];
  }
  if (d == 2) enumerate_facets();
}

void QFunction::enumerate_facets() {
  const int n = static_cast<int>(points_.cols());
  const VPolytope hull = convex_hull_2d(points_);
  const double sx = std::max(1.0, points_.cwiseAbs().maxCoeff());
  const double sc = std::max(1.0, costs_.cwiseAbs().maxCoeff());
  domain_ = to_hrep_2d(hull);
  const double total_area = area_2d(hull);
  if (hull.size() < 3 || total_area <= 1e-12 * sx * sx) return;
  const double tight_tol = 1e-9 * sc;
  const double line_tol = 1e-9 * sx;

  // Tight points of a plane, their counter-clockwise hull, and a least-squares refit over them.
  auto make_facet = [&](AffinePiece plane) -> std::optional<Facet> {
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<int> tight;
      for (int i = 0; i < n; ++i) {
        if (costs_[i] - plane(points_.col(i)) <= tight_tol) tight.push_back(i);
      }
      if (tight.size() < 3) return std::nullopt;
      Mat D(static_cast<int>(tight.size()), 3);
      Vec f(static_cast<int>(tight.size()));
      for (std::size_t k = 0; k < tight.size(); ++k) {
        D.row(static_cast<int>(k)) << points_(0, tight[k]), points_(1, tight[k]), 1.0;
        f[static_cast<int>(k)] = costs_[tight[k]];
      }
      if (pass == 1) {
        Mat tp(2, static_cast<int>(tight.size()));
        for (std::size_t k = 0; k < tight.size(); ++k) tp.col(static_cast<int>(k)) = points_.col(tight[k]);
        const VPolytope poly = convex_hull_2d(tp);
        if (poly.size() < 3 || area_2d(poly) <= 1e-14 * sx * sx) return std::nullopt;
        Facet facet;
        facet.plane = plane;
        for (int v = 0; v < poly.size(); ++v) {
          for (int i : tight) {
            if ((points_.col(i) - poly.vertices.col(v)).cwiseAbs().maxCoeff() <= 1e-12 * sx) {
              facet.polygon.push_back(i);
              break;
            }
          }
        }
        if (facet.polygon.size() != static_cast<std::size_t>(poly.size())) return std::nullopt;
        return facet;
      }
      const Vec th = D.colPivHouseholderQr().solve(f);
      plane.slope = th.head(2);
      plane.offset = th[2];
    }
    return std::nullopt;
  };
  auto same_plane = [&](const AffinePiece& a, const AffinePiece& b) {
    return (a.slope - b.slope).cwiseAbs().maxCoeff() * sx + std::abs(a.offset - b.offset) <= 1e-7 * sc;
  };

  Vec centroid = hull.vertices.rowwise().mean();
  const auto seed = q_lp(points_, costs_, centroid);
  if (!seed) return;
  auto first = make_facet(seed->support);
  if (!first) return;

  std::deque<int> queue;
  facets_.push_back(*first);
  queue.push_back(0);
  const std::size_t cap = 4 * static_cast<std::size_t>(n) + 16;
  while (!queue.empty()) {
    const int f = queue.front();
    queue.pop_front();
    const std::vector<int> poly = facets_[f].polygon;
    const AffinePiece plane = facets_[f].plane;
    for (std::size_t e = 0; e < poly.size(); ++e) {
      const int ip = poly[e];
      const int iq = poly[(e + 1) % poly.size()];
      const Vec p = points_.col(ip);
      const Vec dir = points_.col(iq) - p;
      Vec nu(2);
      nu << dir[1], -dir[0];
      nu /= nu.norm();
      int best = -1;
      double best_t = kInf;
      for (int r = 0; r < n; ++r) {
        const double dist = nu.dot(points_.col(r) - p);
        if (dist <= line_tol) continue;
        const double t = (costs_[r] - plane(points_.col(r))) / dist;
        if (t < best_t) {
          best_t = t;
          best = r;
        }
      }
      if (best < 0) continue;  // edge on the domain boundary
      const auto next = plane_through(p, costs_[ip], points_.col(iq), costs_[iq], points_.col(best), costs_[best]);
      if (!next) continue;
      bool seen = false;
      for (const Facet& g : facets_) seen = seen || same_plane(g.plane, *next);
      if (seen) continue;
      auto facet = make_facet(*next);
      if (!facet) continue;
      bool dup = false;
      for (const Facet& g : facets_) dup = dup || same_plane(g.plane, facet->plane);
      if (dup) continue;
      facets_.push_back(std::move(*facet));
      queue.push_back(static_cast<int>(facets_.size()) - 1);
      if (facets_.size() > cap) return;
    }
  }
  double covered = 0.0;
  for (const Facet& g : facets_) {
    Mat poly(2, static_cast<int>(g.polygon.size()));
    for (std::size_t k = 0; k < g.polygon.size(); ++k) poly.col(static_cast<int>(k)) = points_.col(g.polygon[k]);
    covered += area_2d(VPolytope{poly});
  }
  exact_ = std::abs(covered - total_area) <= 1e-6 * total_area;
}

bool QFunction::in_domain(const Vec& x, double tol) const {
  if (td_.dim() == 2 && domain_.rows() > 0) return contains(domain_, x, tol);
  return contains(VPolytope{points_}, x, tol);
}

std::pair<int, double> QFunction::max_facet(const Vec& x) const {
  if (!exact_) throw Error(ErrorCode::NumericalFailure, "facet enumeration unavailable");
  int best = 0;
  double value = facets_.front().plane(x);
  for (std::size_t f = 1; f < facets_.size(); ++f) {
    const double v = facets_[f].plane(x);
    if (v > value) {
      value = v;
      best = static_cast<int>(f);
    }
  }
  return {best, value};
}

std::optional<QValue> QFunction::evaluate(const Vec& x) const {
  if (!exact_) return q_lp(points_, costs_, x);
  if (!in_domain(x)) return std::nullopt;
  const auto [f, value] = max_facet(x);
  return QValue{value, facets_[f].plane};
}

std::optional<double> QFunction::operator()(const Vec& x) const {
  const auto q = evaluate(x);
  if (!q) return std::nullopt;
  return q->value;
}

Proportion estimate_gamma(const QFunction& q, const StageCost& cost, const std::vector<RolloutRecord>& rollouts,
                          double gamma_tol) {
  long events = 0;
  long trials = 0;
  for (const auto& r : rollouts) {
    std::optional<double> qx = q(r.states.front());
    for (std::size_t k = 0; k + 1 < r.states.size(); ++k) {
      const std::optional<double> qn = q(r.states[k + 1]);
      if (qx) {
        ++trials;
        if (!qn || *qn + stage_cost(cost, r.states[k], r.inputs[k]) - *qx > gamma_tol) ++events;
      }
      qx = qn;
    }
  }
  return wilson_interval(events, trials);
}

Proportion estimate_gamma(const QFunction& q, const StageCost& cost, const LtiSystem& sys, const GoalSetData& goal,
                          const ControllerFactory& make_controller, const Vec& x0, int M, std::uint64_t seed,
                          int threads, int t_max, double gamma_tol) {
  const auto rollouts = simulate_rollouts(
      sys, goal, make_controller, x0, M, [seed](int i) { return derive_seed({seed, static_cast<std::uint64_t>(i)}); },
      threads, t_max);
  return estimate_gamma(q, cost, rollouts, gamma_tol);
}

}  // namespace lmpc
