#pragma once

// The double-integrator benchmark: W = 0.1·∞-ball, X = 10·∞-ball, U = 1·∞-ball.

#include <memory>

#include "lmpc/plant.hpp"

namespace bench {

inline lmpc::LtiSystem double_integrator() {
  lmpc::LtiSystem sys;
  sys.A = lmpc::Mat(2, 2);
  sys.A << 1.0, 1.0, 0.0, 1.0;
  sys.B = lmpc::Mat(2, 1);
  sys.B << 0.0, 1.0;
  sys.W = lmpc::Box::ball(2, 0.1);
  sys.X = lmpc::HPolytope::from_box(lmpc::Box::ball(2, 10.0));
  sys.U = lmpc::HPolytope::from_box(lmpc::Box::ball(1, 1.0));
  return sys;
}

inline std::shared_ptr<const lmpc::GoalSetData> goal(const lmpc::LtiSystem& sys) {
  return std::make_shared<const lmpc::GoalSetData>(
      lmpc::build_goal_set(sys, lmpc::Mat::Identity(2, 2), lmpc::Mat::Identity(1, 1), 0.01));
}

}  // namespace bench
