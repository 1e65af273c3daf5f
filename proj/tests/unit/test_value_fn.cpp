#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "benchmark.hpp"
#include "lmpc/value_fn.hpp"
#include "oracles.hpp"

using namespace lmpc;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ControllerFactory lqr_factory(const GoalSetData& goal) {
  return [K = goal.K] { return std::make_unique<LinearFeedback>(K); };
}

TerminalData random_td(std::mt19937_64& rng, int n, double spread) {
  TerminalData td;
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < n; ++i) td.points.push_back({oracle::random_vec(rng, 2, -spread, spread), u(rng), 0, i});
  return td;
}

std::vector<Vec> td_positions(const TerminalData& td) {
  std::vector<Vec> p;
  for (const auto& t : td.points) p.push_back(t.vertex);
  return p;
}

std::vector<double> td_costs(const TerminalData& td) {
  std::vector<double> c;
  for (const auto& t : td.points) c.push_back(t.cost);
  return c;
}

}  // namespace

class ValueFnTest : public ::testing::Test {
 protected:
  LtiSystem sys = bench::double_integrator();
  std::shared_ptr<const GoalSetData> goal = bench::goal(sys);
  StageCost cost{1.0, 1.0, goal};

  std::vector<RolloutRecord> rollouts(const Vec& x0, int count, std::uint64_t seed, int iteration = 1) {
    auto r = simulate_rollouts(
        sys, *goal, lqr_factory(*goal), x0, count, [seed](int i) { return derive_seed({seed, std::uint64_t(i)}); }, 1,
        kDefaultTmax, iteration);
    for (auto& x : r) x.cost_to_go = realized_cost_to_go(x, cost);
    return r;
  }

  // Terminal data after one LQR iteration from x0.
  TerminalData lqr_td(const Vec& x0, int count, std::uint64_t seed) {
    const auto rolls = rollouts(x0, count, seed);
    return extend_terminal_data(terminal_data_from_goal(*goal), build_reach_sets(rolls), fit_step_hyperplanes(rolls));
  }
};

TEST_F(ValueFnTest, CostToGoVanishesInsideGoal) {
  RolloutRecord r;
  Vec x = goal->O.vertex(0) * 0.5;
  r.states.push_back(x);
  Rng rng(2);
  for (int k = 0; k < 5; ++k) {
    const Vec u = goal->K * x;
    x = step(sys, x, u, sample_disturbance(sys, rng));
    r.inputs.push_back(u);
    r.states.push_back(x);
  }
  r.time_to_goal = 5;
  for (double j : realized_cost_to_go(r, cost)) EXPECT_NEAR(j, 0.0, 1e-12);
}

TEST_F(ValueFnTest, CostToGoTelescopes) {
  for (const auto& r : rollouts(v2(2, -0.5), 20, 4)) {
    ASSERT_EQ(r.cost_to_go.size(), r.states.size());
    for (int k = 0; k < r.time_to_goal; ++k) {
      const double h = stage_cost(cost, r.states[k], r.inputs[k]);
      EXPECT_NEAR(r.cost_to_go[k] - r.cost_to_go[k + 1], h, 1e-12);
      EXPECT_GE(h, 0.0);
    }
  }
}

TEST_F(ValueFnTest, CostToGoMatchesIndependentSum) {
  RolloutRecord r;
  r.states = {v2(3, -1), v2(2, -1.5), v2(0.5, -0.6), Vec::Zero(2)};
  r.inputs = {Vec::Constant(1, -0.5), Vec::Constant(1, 0.9), Vec::Constant(1, 0.6)};
  r.time_to_goal = 3;
  const auto J = realized_cost_to_go(r, cost);
  double expected = 0.0;
  for (int k = 3; k >= 0; --k) {
    const Vec u = k == 3 ? Vec(goal->K * r.states[k]) : r.inputs[k];
    double h = set_distance_l1(u, goal->KO);
    if (!contains(goal->O, r.states[k])) h += set_distance_l1(r.states[k], goal->O);
    expected += h;
    EXPECT_NEAR(J[k], expected, 1e-8);
  }
}

TEST_F(ValueFnTest, CostToGoRejectsIncompleteRollout) {
  RolloutRecord r;
  r.states = {v2(5, 0)};
  try {
    realized_cost_to_go(r, cost);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompleteRollout);
  }
}

TEST(Hyperplane, SingleSampleInterpolates) {
  const CostHyperplane h = fit_upper_hyperplane({v2(1, 2)}, {3.5});
  EXPECT_NEAR(h.a.dot(v2(1, 2)) + h.b, 3.5, 1e-9);
  EXPECT_NEAR(h.residual, 0.0, 1e-12);
}

TEST(Hyperplane, RecoversAffineData) {
  std::mt19937_64 rng(3);
  std::vector<Vec> xs;
  std::vector<double> js;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(oracle::random_vec(rng, 2, -3, 3));
    js.push_back(0.7 * xs.back()[0] - 1.3 * xs.back()[1] + 4.0);
  }
  const CostHyperplane h = fit_upper_hyperplane(xs, js);
  EXPECT_NEAR(h.a[0], 0.7, 1e-8);
  EXPECT_NEAR(h.a[1], -1.3, 1e-8);
  EXPECT_NEAR(h.b, 4.0, 1e-8);
  EXPECT_NEAR(h.residual, 0.0, 1e-12);
}

TEST(Hyperplane, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> xs;
    std::vector<double> js;
    Mat D(6, 3);
    Vec f(6);
    for (int i = 0; i < 6; ++i) {
      xs.push_back(oracle::random_vec(rng, 2, -2, 2));
      js.push_back(oracle::random_vec(rng, 1, 0, 5)[0]);
      D.row(i) << xs[i][0], xs[i][1], 1.0;
      f[i] = js[i];
    }
    const auto ref = oracle::cls_active_set_enumeration(D, f, D, f);
    ASSERT_TRUE(ref.has_value());
    const CostHyperplane h = fit_upper_hyperplane(xs, js);
    EXPECT_NEAR(h.a[0], (*ref)[0], 1e-6);
    EXPECT_NEAR(h.a[1], (*ref)[1], 1e-6);
    EXPECT_NEAR(h.b, (*ref)[2], 1e-6);
  }
}

TEST_F(ValueFnTest, StepPlanesDominateSamples) {
  const auto rolls = rollouts(v2(2.5, 0), 200, 12);
  const auto planes = fit_step_hyperplanes(rolls);
  for (const auto& r : rolls) {
    for (int k = 0; k <= r.time_to_goal; ++k) {
      EXPECT_GE(planes[k].a.dot(r.states[k]) + planes[k].b, r.cost_to_go[k] - 1e-7);
      EXPECT_EQ(planes[k].step, k);
    }
  }
}

TEST_F(ValueFnTest, TerminalDataInvariants) {
  const auto rolls = rollouts(v2(2.5, 0), 100, 13);
  const auto rs = build_reach_sets(rolls);
  const TerminalData td = extend_terminal_data(terminal_data_from_goal(*goal), rs, fit_step_hyperplanes(rolls));
  int zero_o = 0;
  for (const auto& p : td.points) {
    EXPECT_GE(p.cost, 0.0);
    if (p.iteration < 0) {
      EXPECT_EQ(p.cost, 0.0);
      ++zero_o;
    }
  }
  EXPECT_EQ(zero_o, goal->O.size());
  // Same convex hull as the safe set built from the same data.
  const auto cs = update_convex_safe_set(ConvexSafeSetApprox::from_goal(*goal), rs, *goal);
  const VPolytope h = convex_hull(td.vertices());
  EXPECT_NEAR(area_2d(h), area_2d(cs.hull()), 1e-9);
  EXPECT_EQ(h.size(), cs.size());
}

TEST_F(ValueFnTest, QIsZeroOnGoal) {
  const TerminalData td = terminal_data_from_goal(*goal);
  const QFunction q(td);
  EXPECT_TRUE(q.exact());
  for (int i = 0; i < goal->O.size(); ++i) {
    const Vec x = 0.7 * goal->O.vertex(i);
    EXPECT_NEAR(*eval_Q(td, x), 0.0, 1e-12);
    EXPECT_NEAR(*q(x), 0.0, 1e-12);
  }
}

TEST_F(ValueFnTest, QMidpointBound) {
  const TerminalData td = lqr_td(v2(2, 0.5), 100, 3);
  for (int i = 0; i + 1 < td.size(); i += 7) {
    const auto& a = td.points[i];
    const auto& b = td.points[i + 1];
    const auto v = eval_Q(td, 0.5 * (a.vertex + b.vertex));
    ASSERT_TRUE(v.has_value());
    EXPECT_LE(*v, 0.5 * (a.cost + b.cost) + 1e-9);
  }
}

TEST(QLp, MatchesLowerEnvelopeOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const TerminalData td = random_td(rng, 3 + trial % 4, 2.0);
    const auto pts = td_positions(td);
    const auto cs = td_costs(td);
    for (int k = 0; k < 10; ++k) {
      const Vec x = oracle::random_vec(rng, 2, -2, 2);
      const auto ref = oracle::lower_envelope_2d(pts, cs, x);
      const auto got = eval_Q(td, x);
      ASSERT_EQ(ref.has_value(), got.has_value()) << x.transpose();
      if (ref) EXPECT_NEAR(*got, *ref, 1e-7);
    }
  }
}

TEST(QLp, SupportPlaneIsGlobalMinorant) {
  std::mt19937_64 rng(5);
  const TerminalData td = random_td(rng, 12, 3.0);
  for (int k = 0; k < 30; ++k) {
    const auto q = eval_Q_with_support(td, oracle::random_vec(rng, 2, -1, 1));
    ASSERT_TRUE(q.has_value());
    for (const auto& p : td.points) EXPECT_LE(q->support(p.vertex), p.cost + 1e-8);
  }
}

TEST(QLp, OutsideDomainIsEmpty) {
  std::mt19937_64 rng(6);
  const TerminalData td = random_td(rng, 8, 1.0);
  EXPECT_FALSE(eval_Q(td, v2(5, 5)).has_value());
  EXPECT_FALSE(QFunction(td)(v2(5, 5)).has_value());
}

TEST(QFacets, RandomInstancesTileAndMatchLp) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    const TerminalData td = random_td(rng, 5 + 3 * trial, 3.0);
    const QFunction q(td);
    ASSERT_TRUE(q.exact()) << "trial " << trial;
    for (int k = 0; k < 40; ++k) {
      const Vec x = oracle::random_vec(rng, 2, -3, 3);
      const auto a = q(x);
      const auto b = eval_Q(td, x);
      ASSERT_EQ(a.has_value(), b.has_value());
      if (a) EXPECT_NEAR(*a, *b, 1e-7 * (1 + std::abs(*b)));
    }
  }
}

TEST(QFacets, CoplanarCostsGiveSingleFacet) {
  std::mt19937_64 rng(8);
  TerminalData td;
  for (int i = 0; i < 30; ++i) {
    const Vec x = oracle::random_vec(rng, 2, -2, 2);
    td.points.push_back({x, 2.0 * x[0] + x[1] + 10.0, 0, 0});
  }
  td.points.push_back(td.points[3]);
  td.points.back().cost += 1.0;  // duplicate vertex at a higher cost is dominated
  const QFunction q(td);
  EXPECT_TRUE(q.exact());
  EXPECT_EQ(q.facets().size(), 1u);
}

TEST_F(ValueFnTest, FacetsMatchLpOnRolloutData) {
  const TerminalData td = lqr_td(v2(3, -0.5), 300, 41);
  const QFunction q(td);
  ASSERT_TRUE(q.exact());
  std::mt19937_64 rng(4);
  int inside = 0;
  std::uniform_int_distribution<int> pick(0, td.size() - 1);
  for (int k = 0; k < 300; ++k) {
    // Half the queries are convex combinations of terminal vertices, half uniform in a box.
    Vec x = oracle::random_vec(rng, 2, -1, 3.5);
    if (k % 2 == 0) {
      const Vec w = oracle::random_vec(rng, 3, 0, 1);
      x = (w[0] * td.points[pick(rng)].vertex + w[1] * td.points[pick(rng)].vertex +
           w[2] * td.points[pick(rng)].vertex) / w.sum();
    }
    const auto a = q.evaluate(x);
    const auto b = eval_Q(td, x);
    ASSERT_EQ(a.has_value(), b.has_value()) << x.transpose();
    if (!a) continue;
    ++inside;
    EXPECT_NEAR(a->value, *b, 1e-7 * (1 + *b));
    EXPECT_NEAR(a->support(x), a->value, 1e-12);
  }
  EXPECT_GE(inside, 150);
}

TEST_F(ValueFnTest, QProperties) {
  const TerminalData td = lqr_td(v2(-2.5, 1), 200, 8);
  const QFunction q(td);
  for (const auto& p : td.points) EXPECT_LE(*q(p.vertex), p.cost + 1e-7);
  std::mt19937_64 rng(10);
  std::vector<Vec> in;
  while (in.size() < 200) {
    const Vec x = oracle::random_vec(rng, 2, -3, 1.5);
    if (q.in_domain(x)) in.push_back(x);
  }
  for (const Vec& x : in) EXPECT_GE(*q(x), -1e-9);
  for (int i = 0; i < 100; ++i) {
    const Vec& x = in[2 * i];
    const Vec& y = in[2 * i + 1];
    for (double l : {0.25, 0.5, 0.75}) EXPECT_LE(*q(l * x + (1 - l) * y), l * *q(x) + (1 - l) * *q(y) + 1e-6);
  }
  for (int i = 0; i < 50; ++i) {
    const Vec w = oracle::random_vec(rng, 2, 0, 1);
    const Vec o = goal->O.vertex(i % goal->O.size()) * w[0] + goal->O.vertex((i + 1) % goal->O.size()) * (1 - w[0]);
    EXPECT_NEAR(*q(o * w[1]), 0.0, 1e-9);
  }
}

TEST_F(ValueFnTest, GammaZeroOnGoalUnderLqr) {
  const QFunction q(terminal_data_from_goal(*goal));
  std::vector<RolloutRecord> rolls;
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    RolloutRecord r;
    Vec x = goal->O.vertex(i % goal->O.size());
    r.states.push_back(x);
    for (int k = 0; k < 10; ++k) {
      const Vec u = goal->K * x;
      x = step(sys, x, u, sample_disturbance(sys, rng));
      r.inputs.push_back(u);
      r.states.push_back(x);
    }
    rolls.push_back(r);
  }
  const Proportion p = estimate_gamma(q, cost, rolls);
  EXPECT_EQ(p.trials, 200);
  EXPECT_EQ(p.events, 0);
}

TEST_F(ValueFnTest, GammaCountsDomainExitAndIncrease) {
  const QFunction q(terminal_data_from_goal(*goal));
  const double r = support(goal->O, v2(1, 0));
  RolloutRecord roll;
  roll.states = {Vec::Zero(2), v2(r + 1, 0), Vec::Zero(2), Vec::Zero(2)};
  roll.inputs = {Vec::Zero(1), Vec::Zero(1), Vec::Constant(1, 5.0)};
  // 0→out leaves the domain, out→0 starts outside, 0→0 with a costly input breaks the decrease.
  const Proportion p = estimate_gamma(q, cost, {roll});
  EXPECT_EQ(p.trials, 2);
  EXPECT_EQ(p.events, 2);
}
