#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "benchmark.hpp"
#include "lmpc/safe_set.hpp"
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

std::vector<RolloutRecord> lqr_rollouts(const LtiSystem& sys, const GoalSetData& goal, const Vec& x0, int count,
                                        std::uint64_t seed, int iteration = 1) {
  return simulate_rollouts(
      sys, goal, lqr_factory(goal), x0, count, [seed](int i) { return derive_seed({seed, std::uint64_t(i)}); }, 1,
      kDefaultTmax, iteration);
}

// Roots of (p̂ − p)² = z² p(1 − p)/n, solved directly as a quadratic in p.
std::pair<double, double> score_interval_roots(long k, long n, double z) {
  const double ph = double(k) / double(n);
  const double a = 1.0 + z * z / n;
  const double b = -(2.0 * ph + z * z / n);
  const double c = ph * ph;
  const double disc = std::sqrt(std::max(0.0, b * b - 4 * a * c));
  return {(-b - disc) / (2 * a), (-b + disc) / (2 * a)};
}

RolloutRecord synthetic(std::vector<Vec> states) {
  RolloutRecord r;
  r.states = std::move(states);
  r.inputs.assign(r.states.size() - 1, Vec::Zero(1));
  r.time_to_goal = static_cast<int>(r.inputs.size());
  return r;
}

}  // namespace

class SafeSetTest : public ::testing::Test {
 protected:
  LtiSystem sys = bench::double_integrator();
  std::shared_ptr<const GoalSetData> goal = bench::goal(sys);
};

TEST_F(SafeSetTest, RolloutStartingInGoalHasZeroLength) {
  LinearFeedback ctrl(goal->K);
  Rng rng(3);
  const RolloutRecord r = simulate_rollout(sys, *goal, ctrl, Vec::Zero(2), rng);
  EXPECT_EQ(r.time_to_goal, 0);
  EXPECT_EQ(r.states.size(), 1u);
  EXPECT_TRUE(r.inputs.empty());
}

TEST_F(SafeSetTest, LqrRolloutsAreConsistentAndEndInGoal) {
  const auto rolls = lqr_rollouts(sys, *goal, v2(0.6, 0.2), 50, 11);
  for (const auto& r : rolls) {
    EXPECT_LE(consistency_violation(sys, r), 1e-9);
    EXPECT_LE(constraint_violation(sys, r), 0.0);
    EXPECT_TRUE(goal->in_goal(r.states.back()));
    for (int k = 0; k < r.time_to_goal; ++k) EXPECT_FALSE(goal->in_goal(r.states[k]));
    EXPECT_EQ(r.iteration, 1);
  }
}

TEST_F(SafeSetTest, RolloutDivergesPastTmax) {
  LinearFeedback ctrl(Mat::Zero(1, 2));
  Rng rng(5);
  try {
    simulate_rollout(sys, *goal, ctrl, v2(5, 0), rng, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RolloutDiverged);
  }
}

TEST_F(SafeSetTest, ConsistencyViolationDetectsForeignDisturbance) {
  RolloutRecord r = synthetic({v2(1, 1), v2(2.5, 1)});
  EXPECT_NEAR(consistency_violation(sys, r), 0.4, 1e-12);
}

TEST_F(SafeSetTest, SimulateRolloutsIsThreadCountInvariant) {
  auto seed_of = [](int i) { return derive_seed({42, std::uint64_t(i)}); };
  const auto a = simulate_rollouts(sys, *goal, lqr_factory(*goal), v2(1, 0), 40, seed_of, 1);
  const auto b = simulate_rollouts(sys, *goal, lqr_factory(*goal), v2(1, 0), 40, seed_of, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, b[i].seed);
    ASSERT_EQ(a[i].states.size(), b[i].states.size());
    for (std::size_t k = 0; k < a[i].states.size(); ++k) EXPECT_EQ(a[i].states[k], b[i].states[k]);
  }
}

TEST_F(SafeSetTest, SingleRolloutGivesPointReachSets) {
  const auto rolls = lqr_rollouts(sys, *goal, v2(1, 0), 1, 7);
  const SampledReachSets rs = build_reach_sets(rolls);
  ASSERT_EQ(static_cast<int>(rs.sets.size()), rolls[0].time_to_goal + 1);
  for (std::size_t k = 0; k < rs.sets.size(); ++k) {
    ASSERT_EQ(rs.sets[k].size(), 1);
    EXPECT_EQ(rs.sets[k].vertex(0), rolls[0].states[k]);
  }
  EXPECT_EQ(rs.rollout_count, 1);
}

TEST_F(SafeSetTest, ReachSetsAreSoundAndStartAtX0) {
  const Vec x0 = v2(1.5, -0.5);
  const auto rolls = lqr_rollouts(sys, *goal, x0, 200, 9);
  const SampledReachSets rs = build_reach_sets(rolls);
  ASSERT_EQ(rs.sets[0].size(), 1);
  EXPECT_EQ(rs.sets[0].vertex(0), x0);
  for (const auto& r : rolls) {
    for (int k = 0; k <= r.time_to_goal; ++k) EXPECT_TRUE(contains(rs.sets[k], r.states[k]));
  }
}

TEST_F(SafeSetTest, SubsetReachSetsNestInsideFullDraw) {
  const auto full = lqr_rollouts(sys, *goal, v2(1, 0.5), 300, 21);
  const std::vector<RolloutRecord> prefix(full.begin(), full.begin() + 30);
  const auto small = build_reach_sets(prefix);
  const auto big = build_reach_sets(full);
  ASSERT_LE(small.sets.size(), big.sets.size());
  for (std::size_t k = 0; k < small.sets.size(); ++k) {
    for (int i = 0; i < small.sets[k].size(); ++i) EXPECT_TRUE(contains(big.sets[k], small.sets[k].vertex(i)));
  }
}

TEST_F(SafeSetTest, EmptyRolloutListRejected) {
  try {
    build_reach_sets({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST_F(SafeSetTest, FromGoalMatchesO) {
  const auto cs = ConvexSafeSetApprox::from_goal(*goal);
  EXPECT_EQ(cs.size(), goal->O.size());
  for (int i = 0; i < goal->O.size(); ++i) EXPECT_TRUE(contains(cs.hull(), goal->O.vertex(i)));
  for (const auto& p : cs.provenance()) {
    EXPECT_EQ(p.iteration, -1);
    EXPECT_EQ(p.step, -1);
  }
}

TEST_F(SafeSetTest, EmptyUpdateIsIdentity) {
  const auto cs0 = ConvexSafeSetApprox::from_goal(*goal);
  const auto cs1 = update_convex_safe_set(cs0, SampledReachSets{}, *goal);
  ASSERT_EQ(cs1.size(), cs0.size());
  for (int i = 0; i < cs0.size(); ++i) EXPECT_TRUE(contains(cs1.hull(), cs0.hull().vertex(i)));
  EXPECT_NEAR(area_2d(cs1.hull()), area_2d(cs0.hull()), 1e-12);
}

TEST_F(SafeSetTest, UpdateCoversSourcesAndLabelsVertices) {
  const auto cs0 = ConvexSafeSetApprox::from_goal(*goal);
  const auto rolls = lqr_rollouts(sys, *goal, v2(2, 0), 100, 31, 1);
  const auto rs = build_reach_sets(rolls);
  const auto cs1 = update_convex_safe_set(cs0, rs, *goal);
  for (int i = 0; i < goal->O.size(); ++i) EXPECT_TRUE(cs1.contains(goal->O.vertex(i)));
  for (const auto& r : rolls)
    for (const Vec& x : r.states) EXPECT_TRUE(cs1.contains(x));
  ASSERT_EQ(cs1.provenance().size(), std::size_t(cs1.size()));
  for (int i = 0; i < cs1.size(); ++i) {
    const Provenance p = cs1.provenance()[i];
    if (p.iteration < 0) {
      EXPECT_TRUE(contains(goal->O, cs1.hull().vertex(i)));
    } else {
      EXPECT_EQ(p.iteration, 1);
      ASSERT_LT(p.step, static_cast<int>(rs.sets.size()));
      bool found = false;
      for (int v = 0; v < rs.sets[p.step].size(); ++v)
        found |= (rs.sets[p.step].vertex(v) - cs1.hull().vertex(i)).norm() <= 1e-12;
      EXPECT_TRUE(found);
    }
  }
  bool has_x0 = false;
  for (int i = 0; i < cs1.size(); ++i) has_x0 |= (cs1.hull().vertex(i) - v2(2, 0)).norm() == 0.0;
  EXPECT_TRUE(has_x0);
}

TEST_F(SafeSetTest, SafeSetGrowsMonotonically) {
  auto cs = ConvexSafeSetApprox::from_goal(*goal);
  const std::vector<Vec> starts = {v2(1, 0), v2(-1, 1), v2(2, -1), v2(0, 1.5), v2(-2.5, 0.5)};
  for (std::size_t j = 0; j < starts.size(); ++j) {
    const auto rs = build_reach_sets(lqr_rollouts(sys, *goal, starts[j], 20, 100 + j, int(j) + 1));
    const auto next = update_convex_safe_set(cs, rs, *goal);
    for (int i = 0; i < cs.size(); ++i) EXPECT_TRUE(next.contains(cs.hull().vertex(i)));
    EXPECT_GE(area_2d(next.hull()), area_2d(cs.hull()) - 1e-12);
    cs = next;
  }
}

TEST_F(SafeSetTest, MembershipMatchesVrepLp) {
  auto cs = ConvexSafeSetApprox::from_goal(*goal);
  cs = update_convex_safe_set(cs, build_reach_sets(lqr_rollouts(sys, *goal, v2(2, 0.5), 60, 5)), *goal);
  std::mt19937_64 rng(17);
  int inside = 0;
  for (int t = 0; t < 400; ++t) {
    const Vec x = oracle::random_vec(rng, 2, -2.5, 2.5);
    const bool a = cs.contains(x);
    EXPECT_EQ(a, contains(cs.hull(), x)) << x.transpose();
    inside += a;
  }
  EXPECT_GT(inside, 10);
}

TEST(Wilson, MatchesScoreQuadraticRoots) {
  const double z = 1.959963984540054;
  for (auto [k, n] : std::vector<std::pair<long, long>>{{0, 10}, {5, 10}, {36, 1000}, {3, 1000}, {10, 10}}) {
    const Proportion p = wilson_interval(k, n);
    const auto [lo, hi] = score_interval_roots(k, n, z);
    EXPECT_NEAR(p.estimate, double(k) / n, 1e-15);
    EXPECT_NEAR(p.lower, lo, 1e-12);
    EXPECT_NEAR(p.upper, hi, 1e-12);
  }
}

TEST(Wilson, ZeroTrials) {
  const Proportion p = wilson_interval(0, 0);
  EXPECT_EQ(p.estimate, 0.0);
  EXPECT_EQ(p.lower, 0.0);
  EXPECT_EQ(p.upper, 1.0);
}

TEST_F(SafeSetTest, EpsilonIsZeroForGoalUnderLqr) {
  const auto cs = ConvexSafeSetApprox::from_goal(*goal);
  // Starting outside O, every transition that originates in O must stay in O.
  const Proportion p = estimate_epsilon(cs, sys, *goal, lqr_factory(*goal), v2(1, 0), 200, 77);
  EXPECT_EQ(p.events, 0);
  EXPECT_EQ(p.estimate, 0.0);
}

TEST_F(SafeSetTest, EpsilonCountsTransitionsFromInside) {
  auto cs = ConvexSafeSetApprox::from_goal(*goal);
  const double r = support(goal->O, v2(1, 0));
  const Vec in = Vec::Zero(2);
  const Vec out = v2(r + 1.0, 0);
  // in→out, out→in, in→in, in→out : 3 trials, 2 escapes; second roll-out: out→in : 0 trials.
  const std::vector<RolloutRecord> rolls = {synthetic({in, out, in, in, out}), synthetic({out, in})};
  const Proportion p = estimate_epsilon(cs, rolls);
  EXPECT_EQ(p.trials, 3);
  EXPECT_EQ(p.events, 2);
  EXPECT_NEAR(p.estimate, 2.0 / 3.0, 1e-15);
}
