#include "lmpc/lmpc.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace lmpc {

std::vector<int> ScenarioTree::leaf_path(int leaf) const {
  std::vector<int> path;
  for (int n = leaves.at(leaf).parent; n >= 0; n = nodes[n].parent) path.push_back(n);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> ScenarioTree::leaf_branches(int leaf) const {
  std::vector<int> b{leaves.at(leaf).branch};
  for (int n = leaves[leaf].parent; n > 0; n = nodes[n].parent) b.push_back(nodes[n].branch);
  std::reverse(b.begin(), b.end());
  return b;
}

ScenarioTree build_scenario_tree(int horizon, const Box& W) {
  if (horizon < 1) throw Error(ErrorCode::ConfigInvalid, "horizon must be at least 1");
  W.validate();
  ScenarioTree t;
  t.horizon = horizon;
  const Mat V = box_vertices(W);
  for (int i = 0; i < V.cols(); ++i) {
    bool dup = false;
    for (const Vec& w : t.disturbances) dup = dup || (w - V.col(i)).cwiseAbs().maxCoeff() <= kDedupTol;
    if (!dup) t.disturbances.push_back(V.col(i));
  }
  const int m = t.m();
  double leaves = 1.0;
  for (int k = 0; k < horizon; ++k) leaves *= m;
  if (leaves > static_cast<double>(kMaxLeaves)) {
    throw Error(ErrorCode::TreeTooLarge, std::to_string(m) + "^" + std::to_string(horizon) + " scenarios");
  }
  t.nodes.push_back({0, -1, -1});
  std::size_t begin = 0;
  for (int k = 0; k + 1 < horizon; ++k) {
    const std::size_t end = t.nodes.size();
    for (std::size_t n = begin; n < end; ++n)
      for (int b = 0; b < m; ++b) t.nodes.push_back({k + 1, static_cast<int>(n), b});
    begin = end;
  }
  for (std::size_t n = begin; n < t.nodes.size(); ++n)
    for (int b = 0; b < m; ++b) t.leaves.push_back({horizon, static_cast<int>(n), b});
  return t;
}

namespace {

constexpr double kRowTol = 1e-9;
constexpr double kConstraintMargin = 1e-8;
constexpr int kMaxRounds = 500;

enum RowKind : std::uint64_t { kStateRow = 1, kDistanceRow = 2, kDomainRow = 3, kTerminalRow = 4 };

std::uint64_t row_key(RowKind kind, int point, int index) {
  return (static_cast<std::uint64_t>(kind) << 60) | (static_cast<std::uint64_t>(point) << 32) |
         static_cast<std::uint32_t>(index);
}

HPolytope tightened(const HPolytope& p) {
  HPolytope t = p;
  for (int i = 0; i < t.rows(); ++i) t.b[i] -= kConstraintMargin * std::max(1.0, std::abs(t.b[i]));
  return t;
}

}  // namespace

struct FtocpSolver::Impl {
  // A row whose right-hand side moves with x_t: rhs = base − g_psi·x_t.
  struct MovingRow {
    int row;
    Eigen::RowVectorXd g_psi;
    double base;
  };

  LtiSystem sys;
  StageCost cost;
  std::shared_ptr<const QFunction> q;
  ScenarioTree tree;
  int nx = 0, nu = 0, nn = 0, nl = 0;
  int e_off = 0, s_off = 0, tau = 0, nvar = 0;
  HPolytope X, U;
  std::vector<L1DistanceFunction::Piece> o_pieces, ko_pieces;
  std::vector<Mat> a_pow;     // A^k
  std::vector<Mat> a_pow_b;   // A^k B
  // Points 0..nn−1 are nodes, nn..nn+nl−1 leaves.
  std::vector<std::vector<int>> path;  // ancestor nodes, root first
  std::vector<Vec> offset;             // disturbance contribution to the point state
  std::vector<int> depth;
  std::optional<RowGenerationLp> lp;
  std::vector<MovingRow> moving;
  std::unordered_set<std::uint64_t> keys;

  void build_base();
  int s_var(int node) const { return s_off + node - 1; }
  int point_count() const { return nn + nl; }
  SparseRow state_row(int point, const Vec& g) const;
  void add_state_row(std::uint64_t key, int point, const Vec& g, double base, SparseRow extra, const Vec& x_t);
  void states(const Vec& z, const Vec& x_t, std::vector<Vec>& out) const;
  FtocpSolution solve(const Vec& x_t);
};

void FtocpSolver::Impl::build_base() {
  lp.reset();
  moving.clear();
  keys.clear();
  Vec c = Vec::Zero(nvar);
  c[tau] = 1.0;
  lp.emplace(c);
  for (int n = 0; n < nn; ++n) {
    for (int i = 0; i < U.rows(); ++i) {
      SparseRow r;
      for (int j = 0; j < nu; ++j) r.add(n * nu + j, U.A(i, j));
      lp->add_row(r, U.b[i]);
    }
    SparseRow nonneg;
    nonneg.add(e_off + n, -1.0);
    lp->add_row(nonneg, 0.0);
    if (cost.input_weight != 0.0) {
      for (const auto& p : ko_pieces) {
        SparseRow r;
        for (int j = 0; j < nu; ++j) r.add(n * nu + j, cost.input_weight * p.slope[j]);
        r.add(e_off + n, -1.0);
        lp->add_row(r, cost.input_weight * p.offset);
      }
    }
    if (n > 0) {
      SparseRow s;
      s.add(s_var(n), -1.0);
      lp->add_row(s, 0.0);
    }
  }
  // Q̃ ≥ 0, so the zero plane bounds every leaf from the start.
  for (int l = 0; l < nl; ++l) {
    SparseRow r;
    for (int n : path[nn + l]) {
      r.add(e_off + n, 1.0);
      if (n > 0) r.add(s_var(n), 1.0);
    }
    r.add(tau, -1.0);
    lp->add_row(r, 0.0);
  }
}

SparseRow FtocpSolver::Impl::state_row(int point, const Vec& g) const {
  SparseRow r;
  const int k = depth[point];
  const auto& p = path[point];
  for (int j = 0; j < k; ++j) {
    const Eigen::RowVectorXd coef = g.transpose() * a_pow_b[k - 1 - j];
    for (int i = 0; i < nu; ++i) r.add(p[j] * nu + i, coef[i]);
  }
  return r;
}

void FtocpSolver::Impl::add_state_row(std::uint64_t key, int point, const Vec& g, double base, SparseRow extra,
                                      const Vec& x_t) {
  SparseRow r = state_row(point, g);
  for (std::size_t i = 0; i < extra.index.size(); ++i) r.add(extra.index[i], extra.value[i]);
  MovingRow mr;
  mr.g_psi = g.transpose() * a_pow[depth[point]];
  mr.base = base - g.dot(offset[point]);
  mr.row = lp->add_row(r, mr.base - mr.g_psi.dot(x_t));
  moving.push_back(std::move(mr));
  keys.insert(key);
}

void FtocpSolver::Impl::states(const Vec& z, const Vec& x_t, std::vector<Vec>& out) const {
  out.resize(point_count());
  out[0] = x_t;
  for (int n = 1; n < nn; ++n) {
    const auto& node = tree.nodes[n];
    out[n] = sys.A * out[node.parent] + sys.B * z.segment(node.parent * nu, nu) + tree.disturbances[node.branch];
  }
  for (int l = 0; l < nl; ++l) {
    const auto& leaf = tree.leaves[l];
    out[nn + l] = sys.A * out[leaf.parent] + sys.B * z.segment(leaf.parent * nu, nu) + tree.disturbances[leaf.branch];
  }
}

FtocpSolution FtocpSolver::Impl::solve(const Vec& x_t) {
  FtocpSolution sol;
  if (x_t.size() != nx) throw Error(ErrorCode::DimensionMismatch, "FTOCP state");
  if (!contains(sys.X, x_t, kRowTol)) return sol;
  for (const MovingRow& r : moving) lp->set_rhs(r.row, r.base - r.g_psi.dot(x_t));

  const HPolytope& cs = q->domain();
  std::vector<Vec> xs;
  for (int round = 0; round < kMaxRounds; ++round) {
    const LpStatus st = lp->solve();
    sol.lp_iterations += lp->last_iterations();
    sol.rounds = round + 1;
    if (st == LpStatus::Infeasible) {
      sol.status = st;
      return sol;
    }
    if (st != LpStatus::Optimal) throw Error(ErrorCode::NumericalFailure, "FTOCP relaxation unbounded");
    const Vec& z = lp->z();
    states(z, x_t, xs);
    int added = 0;
    auto try_add = [&](std::uint64_t key, int point, const Vec& g, double base, SparseRow extra) {
      if (keys.count(key)) return;
      add_state_row(key, point, g, base, std::move(extra), x_t);
      ++added;
    };
    auto most_violated = [&](const HPolytope& P, const Vec& x, double& worst) {
      int best = -1;
      worst = 0.0;
      for (int i = 0; i < P.rows(); ++i) {
        const double v = P.A.row(i).dot(x) - P.b[i];
        if (v > kRowTol * std::max(1.0, std::abs(P.b[i])) && v > worst) {
          worst = v;
          best = i;
        }
      }
      return best;
    };
    for (int p = 1; p < point_count(); ++p) {
      double v = 0.0;
      const int i = most_violated(X, xs[p], v);
      if (i >= 0) try_add(row_key(kStateRow, p, i), p, X.A.row(i).transpose(), X.b[i], {});
      if (p < nn && cost.state_weight != 0.0) {
        int best = -1;
        double val = 0.0;
        for (std::size_t j = 0; j < o_pieces.size(); ++j) {
          const double d = o_pieces[j].slope.dot(xs[p]) - o_pieces[j].offset;
          if (d > val) {
            val = d;
            best = static_cast<int>(j);
          }
        }
        if (best >= 0 && cost.state_weight * val - z[s_var(p)] > kRowTol * std::max(1.0, val)) {
          SparseRow extra;
          extra.add(s_var(p), -1.0);
          try_add(row_key(kDistanceRow, p, best), p, cost.state_weight * o_pieces[best].slope,
                  cost.state_weight * o_pieces[best].offset, extra);
        }
      }
    }
    for (int l = 0; l < nl; ++l) {
      const int p = nn + l;
      double v = 0.0;
      const int i = most_violated(cs, xs[p], v);
      if (i >= 0) try_add(row_key(kDomainRow, p, i), p, cs.A.row(i).transpose(), cs.b[i], {});
      double path_cost = 0.0;
      for (int n : path[p]) path_cost += z[e_off + n] + (n > 0 ? z[s_var(n)] : 0.0);
      const auto [f, qv] = q->max_facet(xs[p]);
      if (path_cost + qv - z[tau] > kRowTol * std::max(1.0, std::abs(z[tau]))) {
        SparseRow extra;
        for (int n : path[p]) {
          extra.add(e_off + n, 1.0);
          if (n > 0) extra.add(s_var(n), 1.0);
        }
        extra.add(tau, -1.0);
        const AffinePiece& plane = q->facets()[f].plane;
        try_add(row_key(kTerminalRow, p, f), p, plane.slope, -plane.offset, extra);
      }
    }
    if (added == 0) {
      sol.status = LpStatus::Optimal;
      double root = 0.0;
      if (cost.state_weight != 0.0 && !cost.goal->in_goal(x_t, 0.0)) {
        double d = 0.0;
        for (const auto& pc : o_pieces) d = std::max(d, pc.slope.dot(x_t) - pc.offset);
        root = cost.state_weight * d;
      }
      sol.worst_case_cost = z[tau] + root;
      sol.root_input = z.segment(0, nu);
      for (int n = 0; n < nn; ++n) sol.node_inputs.push_back(z.segment(n * nu, nu));
      sol.leaf_states.assign(xs.begin() + nn, xs.end());
      return sol;
    }
  }
  throw Error(ErrorCode::NoConvergence, "FTOCP row generation did not settle");
}

FtocpSolver::FtocpSolver(const LtiSystem& sys, const StageCost& cost, std::shared_ptr<const QFunction> q,
                         ScenarioTree tree)
    : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  sys.validate();
  if (!cost.goal || !cost.goal->dist_O || !cost.goal->dist_KO) {
    throw Error(ErrorCode::UnsupportedDimension, "FTOCP needs closed-form goal distances");
  }
  if (!q || !q->exact() || q->data().dim() != 2 || sys.nx() != 2) {
    throw Error(ErrorCode::UnsupportedDimension, "FTOCP needs a 2D state and an enumerated terminal cost");
  }
  if (tree.m() == 0 || tree.disturbances.front().size() != sys.nx()) {
    throw Error(ErrorCode::DimensionMismatch, "scenario tree disturbances");
  }
  m.sys = sys;
  m.cost = cost;
  m.q = std::move(q);
  m.tree = std::move(tree);
  m.nx = sys.nx();
  m.nu = sys.nu();
  m.nn = m.tree.num_nodes();
  m.nl = m.tree.num_leaves();
  m.e_off = m.nn * m.nu;
  m.s_off = m.e_off + m.nn;
  m.tau = m.s_off + m.nn - 1;
  m.nvar = m.tau + 1;
  m.X = sys.X;
  m.U = tightened(sys.U);
  m.o_pieces = cost.goal->dist_O->pieces();
  m.ko_pieces = cost.goal->dist_KO->pieces();
  const int N = m.tree.horizon;
  m.a_pow.push_back(Mat::Identity(m.nx, m.nx));
  for (int k = 1; k <= N; ++k) m.a_pow.push_back(sys.A * m.a_pow.back());
  for (int k = 0; k < N; ++k) m.a_pow_b.push_back(m.a_pow[k] * sys.B);
  const int P = m.nn + m.nl;
  m.path.resize(P);
  m.offset.assign(P, Vec::Zero(m.nx));
  m.depth.assign(P, 0);
  for (int p = 1; p < P; ++p) {
    const auto& node = p < m.nn ? m.tree.nodes[p] : m.tree.leaves[p - m.nn];
    m.path[p] = m.path[node.parent];
    m.path[p].push_back(node.parent);
    m.depth[p] = node.depth;
    m.offset[p] = sys.A * m.offset[node.parent] + m.tree.disturbances[node.branch];
  }
  m.build_base();
}

FtocpSolver::~FtocpSolver() = default;
FtocpSolver::FtocpSolver(FtocpSolver&&) noexcept = default;
FtocpSolver& FtocpSolver::operator=(FtocpSolver&&) noexcept = default;
FtocpSolver::FtocpSolver(const FtocpSolver& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}
FtocpSolver& FtocpSolver::operator=(const FtocpSolver& other) {
  if (this != &other) impl_ = std::make_unique<Impl>(*other.impl_);
  return *this;
}

FtocpSolution FtocpSolver::solve(const Vec& x_t) { return impl_->solve(x_t); }
void FtocpSolver::reset() { impl_->build_base(); }
const ScenarioTree& FtocpSolver::tree() const { return impl_->tree; }
int FtocpSolver::lp_rows() const { return impl_->lp->num_rows(); }

FtocpSolution solve_ftocp(const ScenarioTree& tree, const LtiSystem& sys, const StageCost& cost,
                          std::shared_ptr<const QFunction> q, const Vec& x_t) {
  FtocpSolver solver(sys, cost, std::move(q), tree);
  return solver.solve(x_t);
}

Vec policy(FtocpSolver& solver, const Vec& x_t) {
  const FtocpSolution s = solver.solve(x_t);
  if (s.status != LpStatus::Optimal) throw PolicyInfeasibleError(x_t, "FTOCP infeasible at the realized state");
  return s.root_input;
}

Vec LmpcController::input(const Vec& x) {
  last_ = solver_.solve(x);
  if (last_.status != LpStatus::Optimal) throw PolicyInfeasibleError(x, "FTOCP infeasible at the realized state");
  return last_.root_input;
}

ControllerFactory lmpc_controller_factory(std::shared_ptr<const FtocpSolver> prototype) {
  return [prototype] { return std::make_unique<LmpcController>(*prototype); };
}

ProbeResult frontier_probe(FtocpSolver& solver, const LtiSystem& sys, const Vec& a, const Vec& a_perp, double tol,
                           int max_iterations) {
  const double norm = a.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::ConfigInvalid, "probe direction is zero");
  const Vec dir = a / norm;
  if (std::abs(a_perp.dot(dir)) > 1e-9 * std::max(1.0, a_perp.norm())) {
    throw Error(ErrorCode::ConfigInvalid, "probe directions are not orthogonal");
  }
  double s_max = kInf;
  for (int i = 0; i < sys.X.rows(); ++i) {
    const double ad = sys.X.A.row(i).dot(dir);
    if (ad > 0.0) s_max = std::min(s_max, sys.X.b[i] / ad);
  }
  if (!std::isfinite(s_max)) throw Error(ErrorCode::Unbounded, "probe ray leaves every constraint");
  ProbeResult out;
  auto feasible = [&](double s) {
    ++out.solves;
    return solver.solve(s * dir).status == LpStatus::Optimal;
  };
  if (!feasible(0.0)) throw Error(ErrorCode::NoFeasiblePoint, "FTOCP infeasible at the origin");
  double lo = 0.0;
  double hi = s_max;
  if (feasible(hi)) {
    lo = hi;
  } else {
    for (int it = 0; it < max_iterations && hi - lo > tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
  }
  out.distance = lo;
  out.x0 = lo * dir;
  return out;
}

}  // namespace lmpc
