#include <cmath>
#include <string>

#include "lmpc/optkit.hpp"
#include "simplex_engine.hpp"

namespace lmpc {

namespace {

using detail::SimplexEngine;

long iteration_budget(int rows, int cols) { return 50L * (rows + cols) + 5000; }

bool all_finite(const Mat& m) { return m.size() == 0 || m.allFinite(); }
bool all_finite(const Vec& v) { return v.size() == 0 || v.allFinite(); }

// Lower/upper bound of variable j, treating empty bound vectors as free.
double lower_of(const LinearProgram& lp, int j) { return lp.lower.size() == 0 ? -kInf : lp.lower[j]; }
double upper_of(const LinearProgram& lp, int j) { return lp.upper.size() == 0 ? kInf : lp.upper[j]; }

LpSolution solve_primal_route(const LinearProgram& lp) {
  const int n = lp.num_vars();
  const int mg = static_cast<int>(lp.G.rows());
  const int mf = static_cast<int>(lp.F.rows());
  Vec b(mg + mf);
  if (mg) b.head(mg) = lp.h;
  if (mf) b.tail(mf) = lp.g;

  SimplexEngine engine(b);
  for (int j = 0; j < n; ++j) {
    std::vector<int> idx;
    std::vector<double> val;
    for (int i = 0; i < mg; ++i) {
      if (lp.G(i, j) != 0.0) {
        idx.push_back(i);
        val.push_back(lp.G(i, j));
      }
    }
    for (int i = 0; i < mf; ++i) {
      if (lp.F(i, j) != 0.0) {
        idx.push_back(mg + i);
        val.push_back(lp.F(i, j));
      }
    }
    engine.add_column(idx, val, lp.cost[j], lower_of(lp, j), upper_of(lp, j));
  }
  for (int i = 0; i < mg; ++i) engine.add_column({i}, {1.0}, 0.0, 0.0, kInf);

  LpSolution sol;
  const auto r = engine.solve(iteration_budget(mg + mf, n + mg));
  sol.iterations = static_cast<int>(engine.iterations());
  switch (r) {
    case SimplexEngine::Result::Singular:
      throw Error(ErrorCode::NumericalFailure, "singular simplex basis");
    case SimplexEngine::Result::IterationLimit:
      throw Error(ErrorCode::NumericalFailure, "simplex iteration limit (primal route)");
    case SimplexEngine::Result::Infeasible:
      sol.status = LpStatus::Infeasible;
      return sol;
    case SimplexEngine::Result::Unbounded:
      sol.status = LpStatus::Unbounded;
      return sol;
    case SimplexEngine::Result::Optimal:
      break;
  }
  sol.status = LpStatus::Optimal;
  sol.z.resize(n);
  for (int j = 0; j < n; ++j) sol.z[j] = engine.value(j);
  sol.objective = lp.cost.dot(sol.z);
  const Vec& pi = engine.duals();
  sol.dual = -pi.head(mg);
  sol.eq_dual = -pi.tail(mf);
  sol.reduced_cost.resize(n);
  for (int j = 0; j < n; ++j) sol.reduced_cost[j] = engine.reduced_cost(j);
  return sol;
}

LpSolution solve_dual_route(const LinearProgram& lp) {
  const int n = lp.num_vars();
  const int mg = static_cast<int>(lp.G.rows());
  const int mf = static_cast<int>(lp.F.rows());

  RowGenerationLp rg(lp.cost);
  for (int i = 0; i < mg; ++i) {
    SparseRow row;
    for (int j = 0; j < n; ++j) row.add(j, lp.G(i, j));
    rg.add_row(row, lp.h[i]);
  }
  std::vector<int> lower_row(n, -1);
  std::vector<int> upper_row(n, -1);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lower_of(lp, j))) {
      SparseRow row;
      row.add(j, -1.0);
      lower_row[j] = rg.add_row(row, -lower_of(lp, j));
    }
    if (std::isfinite(upper_of(lp, j))) {
      SparseRow row;
      row.add(j, 1.0);
      upper_row[j] = rg.add_row(row, upper_of(lp, j));
    }
  }
  std::vector<int> eq_row(mf);
  for (int i = 0; i < mf; ++i) {
    SparseRow row;
    for (int j = 0; j < n; ++j) row.add(j, lp.F(i, j));
    eq_row[i] = rg.add_equality(row, lp.g[i]);
  }

  const LpStatus status = rg.solve();
  if (status == LpStatus::Unbounded) {
    // Dual infeasible: the primal is unbounded or infeasible; let phase 1 decide.
    return solve_primal_route(lp);
  }
  LpSolution sol;
  sol.iterations = rg.last_iterations();
  sol.status = status;
  if (status != LpStatus::Optimal) return sol;
  sol.z = rg.z();
  sol.objective = lp.cost.dot(sol.z);
  sol.dual.resize(mg);
  for (int i = 0; i < mg; ++i) sol.dual[i] = rg.row_dual(i);
  sol.eq_dual.resize(mf);
  for (int i = 0; i < mf; ++i) sol.eq_dual[i] = rg.row_dual(eq_row[i]);
  sol.reduced_cost = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (lower_row[j] >= 0) sol.reduced_cost[j] += rg.row_dual(lower_row[j]);
    if (upper_row[j] >= 0) sol.reduced_cost[j] -= rg.row_dual(upper_row[j]);
  }
  return sol;
}

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

void LinearProgram::validate() const {
  const Eigen::Index n = cost.size();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::DimensionMismatch, what); };
  if (G.rows() != h.size() || (G.rows() > 0 && G.cols() != n)) fail("G/h shape");
  if (F.rows() != g.size() || (F.rows() > 0 && F.cols() != n)) fail("F/g shape");
  if (lower.size() != 0 && lower.size() != n) fail("lower bound length");
  if (upper.size() != 0 && upper.size() != n) fail("upper bound length");
  if (!all_finite(cost) || !all_finite(G) || !all_finite(h) || !all_finite(F) || !all_finite(g)) {
    throw Error(ErrorCode::NumericalFailure, "non-finite LP data");
  }
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (std::isnan(lower[j]) || lower[j] == kInf) throw Error(ErrorCode::NumericalFailure, "bad lower bound");
  }
  for (Eigen::Index j = 0; j < upper.size(); ++j) {
    if (std::isnan(upper[j]) || upper[j] == -kInf) throw Error(ErrorCode::NumericalFailure, "bad upper bound");
  }
}

LpSolution solve_lp(const LinearProgram& lp, LpMethod method) {
  lp.validate();
  const int n = lp.num_vars();
  for (int j = 0; j < n; ++j) {
    if (lower_of(lp, j) > upper_of(lp, j)) {
      LpSolution sol;
      sol.status = LpStatus::Infeasible;
      return sol;
    }
  }
  if (method == LpMethod::Auto) {
    method = lp.G.rows() + lp.F.rows() <= n ? LpMethod::Primal : LpMethod::Dual;
  }
  return method == LpMethod::Primal ? solve_primal_route(lp) : solve_dual_route(lp);
}

// RowGenerationLp ------------------------------------------------------------
//
// Primal  min cᵀz  s.t. aᵢᵀz ≤ bᵢ (y ≥ 0),  eₖᵀz = gₖ (v free)
// Dual    min bᵀy + gᵀv  s.t.  Σ yᵢaᵢ + Σ vₖeₖ = −c,  y ≥ 0
// The engine solves the dual; z is recovered as the simplex multipliers.

RowGenerationLp::RowGenerationLp(Vec cost)
    : cost_(std::move(cost)), engine_(std::make_unique<detail::SimplexEngine>(-cost_)) {}

RowGenerationLp::~RowGenerationLp() = default;
RowGenerationLp::RowGenerationLp(RowGenerationLp&&) noexcept = default;
RowGenerationLp& RowGenerationLp::operator=(RowGenerationLp&&) noexcept = default;

RowGenerationLp::RowGenerationLp(const RowGenerationLp& other)
    : cost_(other.cost_),
      engine_(std::make_unique<detail::SimplexEngine>(*other.engine_)),
      z_(other.z_),
      objective_(other.objective_),
      last_iterations_(other.last_iterations_) {}

RowGenerationLp& RowGenerationLp::operator=(const RowGenerationLp& other) {
  if (this != &other) *this = RowGenerationLp(other);
  return *this;
}

int RowGenerationLp::add_row(const SparseRow& row, double rhs) {
  return engine_->add_column(row.index, row.value, rhs, 0.0, kInf);
}

int RowGenerationLp::add_equality(const SparseRow& row, double rhs) {
  return engine_->add_column(row.index, row.value, rhs, -kInf, kInf);
}

void RowGenerationLp::set_rhs(int row, double rhs) { engine_->set_cost(row, rhs); }
double RowGenerationLp::rhs(int row) const { return engine_->cost(row); }
int RowGenerationLp::num_rows() const { return engine_->columns(); }
double RowGenerationLp::row_dual(int row) const { return engine_->value(row); }

LpStatus RowGenerationLp::solve() {
  const int n = num_vars();
  const auto r = engine_->solve(iteration_budget(n, engine_->columns()));
  last_iterations_ = static_cast<int>(engine_->iterations());
  switch (r) {
    case detail::SimplexEngine::Result::Singular:
      throw Error(ErrorCode::NumericalFailure, "singular simplex basis");
    case detail::SimplexEngine::Result::IterationLimit:
      throw Error(ErrorCode::NumericalFailure, "simplex iteration limit (dual route)");
    case detail::SimplexEngine::Result::Infeasible:
      return LpStatus::Unbounded;
    case detail::SimplexEngine::Result::Unbounded:
      return LpStatus::Infeasible;
    case detail::SimplexEngine::Result::Optimal:
      break;
  }
  z_ = engine_->duals();
  objective_ = cost_.dot(z_);
  return LpStatus::Optimal;
}

}  // namespace lmpc
