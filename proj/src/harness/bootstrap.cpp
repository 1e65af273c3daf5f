#include <cmath>

#include "lmpc/harness.hpp"

namespace lmpc {

Vec TubeController::input(const Vec& x) {
  Vec u = k_ < v_.size() ? Vec(v_[k_] + K_ * (x - z_[k_])) : Vec(K_ * x);
  ++k_;
  return u;
}

namespace {

// min Σ q_x |z_k|_O + q_u |v_k|_KO over the tightened nominal problem of length N.
std::optional<TubeController> solve_tube(const LtiSystem& sys, const StageCost& cost, const Vec& x0, int N) {
  const GoalSetData& g = *cost.goal;
  const int nx = sys.nx();
  const int nu = sys.nu();
  const Mat Acl = sys.A + sys.B * g.K;
  const auto& po = g.dist_O->pieces();
  const auto& pko = g.dist_KO->pieces();

  const int nv = N * nu;
  const int n = nv + 2 * N;
  auto t_var = [&](int k) { return nv + k; };
  auto r_var = [&](int k) { return nv + N + k; };

  // z_k = Φ_k x0 + Γ_k v
  std::vector<Mat> Gam(N + 1, Mat::Zero(nx, n));
  std::vector<Vec> phi(N + 1, x0);
  for (int k = 0; k < N; ++k) {
    Gam[k + 1] = sys.A * Gam[k];
    Gam[k + 1].block(0, k * nu, nx, nu) += sys.B;
    phi[k + 1] = sys.A * phi[k];
  }

  // Σ_{i<k} h_W(Mᵢᵀ a) per constraint row, accumulated along k.
  std::vector<Eigen::RowVectorXd> G;
  std::vector<double> h;
  Mat Ai = Mat::Identity(nx, nx);  // Acl^i
  Vec x_shrink = Vec::Zero(sys.X.rows());
  Vec u_shrink = Vec::Zero(sys.U.rows());
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < sys.U.rows(); ++i) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r.segment(k * nu, nu) = sys.U.A.row(i);
      G.push_back(r);
      h.push_back(sys.U.b[i] - u_shrink[i]);
    }
    for (int i = 0; i < sys.U.rows(); ++i) u_shrink[i] += support(sys.W, Vec((sys.U.A.row(i) * g.K * Ai).transpose()));
    for (int i = 0; i < sys.X.rows(); ++i) x_shrink[i] += support(sys.W, Vec((sys.X.A.row(i) * Ai).transpose()));
    Ai = Acl * Ai;
    if (k + 1 < N) {
      for (int i = 0; i < sys.X.rows(); ++i) {
        G.push_back(sys.X.A.row(i) * Gam[k + 1]);
        h.push_back(sys.X.b[i] - x_shrink[i] - sys.X.A.row(i).dot(phi[k + 1]));
      }
    }
  }
  for (int k = 0; k < N; ++k) {
    for (const auto& p : po) {
      Eigen::RowVectorXd r = p.slope.transpose() * Gam[k];
      r[t_var(k)] -= 1.0;
      G.push_back(r);
      h.push_back(p.offset - p.slope.dot(phi[k]));
    }
    for (const auto& p : pko) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r.segment(k * nu, nu) = p.slope.transpose();
      r[r_var(k)] = -1.0;
      G.push_back(r);
      h.push_back(p.offset);
    }
  }
  LinearProgram lp;
  lp.cost = Vec::Zero(n);
  for (int k = 0; k < N; ++k) {
    lp.cost[t_var(k)] = cost.state_weight;
    lp.cost[r_var(k)] = cost.input_weight;
  }
  lp.G.resize(static_cast<int>(G.size()), n);
  lp.h.resize(static_cast<int>(h.size()));
  for (std::size_t i = 0; i < G.size(); ++i) {
    lp.G.row(static_cast<int>(i)) = G[i];
    lp.h[static_cast<int>(i)] = h[i];
  }
  lp.F = Gam[N];
  lp.g = -phi[N];
  lp.lower = Vec::Constant(n, -kInf);
  lp.upper = Vec::Constant(n, kInf);
  for (int k = 0; k < N; ++k) {
    lp.lower[t_var(k)] = 0.0;
    lp.lower[r_var(k)] = 0.0;
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) return std::nullopt;

  std::vector<Vec> z, v;
  for (int k = 0; k < N; ++k) {
    z.push_back(phi[k] + Gam[k] * sol.z);
    v.push_back(sol.z.segment(k * nu, nu));
  }
  return TubeController(g.K, std::move(z), std::move(v));
}

}  // namespace

std::optional<TubeController> plan_tube(const LtiSystem& sys, const StageCost& cost, const Vec& x0, int max_horizon) {
  if (!cost.goal || !cost.goal->dist_O || !cost.goal->dist_KO)
    throw Error(ErrorCode::UnsupportedDimension, "tube planning needs closed-form goal distances");
  if (!contains(sys.X, x0, 0.0)) return std::nullopt;
  for (int N = 1; N <= max_horizon; ++N)
    if (auto t = solve_tube(sys, cost, x0, N)) return t;
  return std::nullopt;
}

BootstrapPolicy bootstrap_policy(const LtiSystem& sys, const StageCost& cost, const Vec& x0, int horizon,
                                 int max_leaves) {
  const auto q = std::make_shared<const QFunction>(terminal_data_from_goal(*cost.goal));
  const double m = static_cast<double>(box_vertices(sys.W).cols());
  for (int N = horizon; std::pow(m, N) <= max_leaves; N *= 2) {
    auto proto = std::make_shared<FtocpSolver>(sys, cost, q, build_scenario_tree(N, sys.W));
    if (proto->solve(x0).status == LpStatus::Optimal) return {"tree", N, lmpc_controller_factory(proto)};
  }
  if (auto tube = plan_tube(sys, cost, x0)) {
    const int N = tube->horizon();
    return {"tube", N, [t = *tube] { return std::make_unique<TubeController>(t); }};
  }
  throw Error(ErrorCode::Bootstrap0Infeasible, "no bootstrap policy reaches O from the initial state");
}

}  // namespace lmpc
