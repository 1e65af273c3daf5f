#include "lmpc/plant.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace lmpc {

namespace {

bool finite(const Mat& m) { return m.size() == 0 || m.allFinite(); }

HPolytope hrep_low_dim(const VPolytope& p) {
  if (p.dim() == 2) return to_hrep_2d(p);
  if (p.dim() == 1) {
    HPolytope h{Mat(2, 1), Vec(2)};
    h.A << 1.0, -1.0;
    h.b << p.vertices.maxCoeff(), -p.vertices.minCoeff();
    return h;
  }
  throw Error(ErrorCode::UnsupportedDimension, "goal-set H-rep needs a 1D or 2D state");
}

}  // namespace

void LtiSystem::validate() const {
  const int n = nx();
  if (A.cols() != n || B.rows() != n || n == 0 || B.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "A must be n×n and B n×d");
  }
  if (!finite(A) || !finite(B)) throw Error(ErrorCode::NumericalFailure, "non-finite system matrices");
  W.validate();
  if (W.dim() != n) throw Error(ErrorCode::DimensionMismatch, "W dimension");
  if (X.dim() != n || X.rows() == 0 || X.A.rows() != X.b.size()) throw Error(ErrorCode::DimensionMismatch, "X dimension");
  if (U.dim() != nu() || U.rows() == 0 || U.A.rows() != U.b.size()) throw Error(ErrorCode::DimensionMismatch, "U dimension");
  check_nonempty_bounded(X);
  check_nonempty_bounded(U);
  if (!contains(W, Vec::Zero(n), 0.0) || !contains(X, Vec::Zero(n), -1e-12) || !contains(U, Vec::Zero(nu()), -1e-12)) {
    throw Error(ErrorCode::ConfigInvalid, "W, X and U must contain the origin (X and U in the interior)");
  }
}

Vec step(const LtiSystem& sys, const Vec& x, const Vec& u, const Vec& w) {
  if (x.size() != sys.nx() || u.size() != sys.nu() || w.size() != sys.nx()) {
    throw Error(ErrorCode::DimensionMismatch, "step arguments");
  }
  if (!contains(sys.W, w, 1e-12)) throw Error(ErrorCode::DisturbanceOutOfSupport, "disturbance outside W");
  return sys.A * x + sys.B * u + w;
}

Vec sample_disturbance(const Box& W, Rng& rng) {
  Vec w(W.dim());
  for (int i = 0; i < W.dim(); ++i) w[i] = W.center[i] + W.radius[i] * (2.0 * uniform01(rng) - 1.0);
  return w;
}

LqrGain dlqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, int max_iterations) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() || R.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "dlqr dimensions");
  }
  Mat P = Q;
  for (int it = 1; it <= max_iterations; ++it) {
    const Mat BtP = B.transpose() * P;
    const Mat gain = (R + BtP * B).ldlt().solve(BtP * A);
    Mat next = A.transpose() * P * A - A.transpose() * P * B * gain + Q;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change <= 1e-12) {
      const Mat BtPf = B.transpose() * P;
      return {-(R + BtPf * B).ldlt().solve(BtPf * A), P, it};
    }
  }
  throw Error(ErrorCode::NoConvergence, "Riccati iteration did not converge");
}

double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P) {
  const Mat BtP = B.transpose() * P;
  const Mat rhs = A.transpose() * P * A - A.transpose() * P * B * (R + BtP * B).ldlt().solve(BtP * A) + Q;
  return (rhs - P).cwiseAbs().maxCoeff();
}

double spectral_radius(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::EigenSolver<Mat>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

MrpiResult mrpi_approx(const Mat& Acl, const Box& W, double contraction_tol, int max_horizon) {
  W.validate();
  const int n = W.dim();
  if (Acl.rows() != n || Acl.cols() != n) throw Error(ErrorCode::DimensionMismatch, "Acl/W dimensions");
  const HPolytope Wh = HPolytope::from_box(W);
  if (Wh.b.minCoeff() <= 0.0) {
    // No contraction factor exists unless 0 ∈ int W; W = {0} gives O = {0}.
    if (W.radius.cwiseAbs().maxCoeff() == 0.0 && W.center.cwiseAbs().maxCoeff() == 0.0) {
      return {VPolytope::point(Vec::Zero(n)), 1, 0.0};
    }
    throw Error(ErrorCode::NotContracting, "W must contain the origin in its interior");
  }
  Mat power = Mat::Identity(n, n);  // Acl^s
  for (int s = 1; s <= max_horizon; ++s) {
    power = Acl * power;
    double alpha = 0.0;
    for (int i = 0; i < Wh.rows(); ++i) {
      alpha = std::max(alpha, support(W, power.transpose() * Wh.A.row(i).transpose()) / Wh.b[i]);
    }
    if (alpha <= contraction_tol) {
      const VPolytope Wv = to_vpolytope(W);
      VPolytope sum = Wv;
      Mat Ai = Mat::Identity(n, n);
      for (int i = 1; i < s; ++i) {
        Ai = Acl * Ai;
        sum = minkowski_sum(sum, linear_image(Wv, Ai));
      }
      return {linear_image(sum, Mat::Identity(n, n) / (1.0 - alpha)), s, alpha};
    }
  }
  throw Error(ErrorCode::NotContracting, "no contraction horizon within the limit");
}

double invariance_violation(const Mat& Acl, const Box& W, const VPolytope& O) {
  const Mat Wv = box_vertices(W);
  double worst = 0.0;
  if (O.dim() <= 2) {
    const HPolytope Oh = hrep_low_dim(O);
    for (int i = 0; i < O.size(); ++i) {
      const Vec image = Acl * O.vertex(i);
      for (int k = 0; k < Wv.cols(); ++k) {
        const Vec y = image + Wv.col(k);
        if (!contains(Oh, y, 0.0)) worst = std::max(worst, set_distance_l1(y, O));
      }
    }
    return worst;
  }
  for (int i = 0; i < O.size(); ++i) {
    const Vec image = Acl * O.vertex(i);
    for (int k = 0; k < Wv.cols(); ++k) worst = std::max(worst, set_distance_l1(image + Wv.col(k), O));
  }
  return worst;
}

GoalSetData build_goal_set(const LtiSystem& sys, const Mat& Q, const Mat& R, double contraction_tol) {
  const LqrGain lqr = dlqr_gain(sys.A, sys.B, Q, R);
  const Mat Acl = sys.A + sys.B * lqr.K;
  if (spectral_radius(Acl) >= 1.0) throw Error(ErrorCode::NotContracting, "LQR closed loop is not stable");
  const MrpiResult mrpi = mrpi_approx(Acl, sys.W, contraction_tol);
  GoalSetData g;
  g.K = lqr.K;
  g.O = mrpi.set;
  g.O_hrep = hrep_low_dim(g.O);
  g.KO = linear_image(g.O, g.K);
  g.mrpi_horizon = mrpi.horizon;
  g.mrpi_alpha = mrpi.alpha;
  g.invariance_margin = invariance_violation(Acl, sys.W, g.O);
  if (g.O.dim() <= 2) g.dist_O.emplace(g.O);
  if (g.KO.dim() <= 2) g.dist_KO.emplace(g.KO);
  return g;
}

bool check_assumption1(const GoalSetData& goal, const LtiSystem& sys, double tol) {
  const Mat Acl = sys.A + sys.B * goal.K;
  if (invariance_violation(Acl, sys.W, goal.O) > tol) return false;
  for (int i = 0; i < goal.O.size(); ++i) {
    if (!contains(sys.U, goal.K * goal.O.vertex(i), tol)) return false;
  }
  return true;
}

double stage_cost(const StageCost& c, const Vec& x, const Vec& u) {
  if (!c.goal) throw Error(ErrorCode::EmptyInput, "stage cost without goal set");
  double cost = 0.0;
  const GoalSetData& g = *c.goal;
  if (c.state_weight != 0.0 && !g.in_goal(x, 0.0)) {
    cost += c.state_weight * (g.dist_O ? (*g.dist_O)(x) : set_distance_l1(x, g.O_hrep));
  }
  if (c.input_weight != 0.0) cost += c.input_weight * (g.dist_KO ? (*g.dist_KO)(u) : set_distance_l1(u, g.KO));
  return cost;
}

}  // namespace lmpc
