#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lmpc/errors.hpp"

namespace lmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace tol {
inline constexpr double kFeas = 1e-8;
inline constexpr double kKkt = 1e-7;
}  // namespace tol

/// min cᵀz  s.t.  G z ≤ h,  F z = g,  lower ≤ z ≤ upper.
///
/// Empty `lower`/`upper` mean the variables are free. Entries may be ±inf.
struct LinearProgram {
  Vec cost;
  Mat G;
  Vec h;
  Mat F;
  Vec g;
  Vec lower;
  Vec upper;

  int num_vars() const { return static_cast<int>(cost.size()); }
  /// Throws DimensionMismatch / NumericalFailure for inconsistent or non-finite data.
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec z;
  double objective = 0.0;
  /// Multipliers y ≥ 0 of the G rows.
  Vec dual;
  /// Multipliers of the F rows.
  Vec eq_dual;
  /// c + Gᵀy + Fᵀv; nonnegative where a lower bound is active, nonpositive at an upper bound.
  Vec reduced_cost;
  int iterations = 0;
};

/// Which standard form the simplex runs on. `Primal` adds slacks to the G rows;
/// `Dual` solves the Lagrange dual, whose basis has one row per variable.
enum class LpMethod { Auto, Primal, Dual };

LpSolution solve_lp(const LinearProgram& lp, LpMethod method = LpMethod::Auto);

/// min ‖D z − f‖²  s.t.  G z ≥ h.
struct ConstrainedLsProblem {
  Mat design;
  Vec target;
  Mat G;
  Vec h;
};

struct ClsResult {
  Vec z;
  double residual = 0.0;  // ‖D z − f‖²
  Vec multipliers;        // one per G row, ≥ 0
  bool degenerate = false;  // design lacks full column rank
  int iterations = 0;
};

/// Active-set solver. `start` must be feasible when given; otherwise a phase-1 LP finds one.
ClsResult solve_cls(const ConstrainedLsProblem& p, const std::optional<Vec>& start = std::nullopt);

/// A sparse row over a fixed variable vector.
struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;

  void add(int i, double v) {
    if (v != 0.0) {
      index.push_back(i);
      value.push_back(v);
    }
  }
  double dot(const Vec& z) const {
    double s = 0.0;
    for (std::size_t k = 0; k < index.size(); ++k) s += value[k] * z[index[k]];
    return s;
  }
};

namespace detail {
class SimplexEngine;
}

/// Inequality-form LP  min cᵀz s.t. aᵢᵀz ≤ bᵢ  with free z and rows that can be
/// appended or have their right-hand side changed between solves.
///
/// Internally runs the primal simplex on the dual problem, so the basis is
/// dim(z) × dim(z) regardless of the row count, and appending rows or changing
/// right-hand sides keeps the previous basis feasible (next solve is warm).
/// Not thread-safe; use one instance per worker.
class RowGenerationLp {
 public:
  explicit RowGenerationLp(Vec cost);
  ~RowGenerationLp();
  RowGenerationLp(RowGenerationLp&&) noexcept;
  RowGenerationLp& operator=(RowGenerationLp&&) noexcept;
  /// Deep copy including the current basis.
  RowGenerationLp(const RowGenerationLp& other);
  RowGenerationLp& operator=(const RowGenerationLp& other);

  int add_row(const SparseRow& row, double rhs);
  int add_equality(const SparseRow& row, double rhs);
  void set_rhs(int row, double rhs);
  double rhs(int row) const;
  int num_rows() const;
  int num_vars() const { return static_cast<int>(cost_.size()); }

  /// Optimal or Infeasible; Unbounded when the dual has no feasible point.
  LpStatus solve();

  const Vec& z() const { return z_; }
  double objective() const { return objective_; }
  /// Multiplier of a row at the last optimal solve.
  double row_dual(int row) const;
  int last_iterations() const { return last_iterations_; }

 private:
  Vec cost_;
  std::unique_ptr<detail::SimplexEngine> engine_;
  Vec z_;
  double objective_ = 0.0;
  int last_iterations_ = 0;
};

}  // namespace lmpc
