#pragma once

#include <vector>

#include <Eigen/Dense>

namespace lmpc::detail {

/// Bounded revised simplex for  min cᵀx s.t. A x = b, lo ≤ x ≤ hi  (bounds may be infinite).
///
/// Columns are sparse and can be appended at any time; they enter the problem
/// nonbasic at a finite bound (or at zero if free). Phase 1 uses one artificial
/// per row; after phase 1 the artificials stay in the problem fixed at zero.
/// The basis inverse is kept dense and refreshed by an LU refactorization every
/// kRefactorPeriod pivots.
class SimplexEngine {
 public:
  enum class Result { Optimal, Infeasible, Unbounded, IterationLimit, Singular };

  explicit SimplexEngine(Eigen::VectorXd b);

  /// Returns the structural column index.
  int add_column(const std::vector<int>& index, const std::vector<double>& value, double cost,
                 double lo, double hi);
  void set_cost(int j, double c) { cost_[artificial_count() + j] = c; }
  double cost(int j) const { return cost_[artificial_count() + j]; }

  Result solve(long max_iterations);

  double value(int j) const { return x_[artificial_count() + j]; }
  /// Simplex multipliers π = B⁻ᵀ c_B of the last phase-2 solve.
  const Eigen::VectorXd& duals() const { return pi_; }
  /// c_j − πᵀA_j for a structural column.
  double reduced_cost(int j) const;
  double objective() const;

  int rows() const { return m_; }
  int columns() const { return static_cast<int>(cost_.size()) - artificial_count(); }
  long iterations() const { return iterations_; }

 private:
  enum class State : unsigned char { Basic, AtLower, AtUpper, FreeZero };
  enum class Phase { NoBasis, Phase1, Phase2 };

  static constexpr int kRefactorPeriod = 64;
  static constexpr int kDegenerateSwitch = 40;

  int artificial_count() const { return m_; }
  double phase_cost(int j) const;
  void start_phase1();
  bool refactor();
  Result run(long max_iterations);
  void compute_duals();
  Result iterate(long max_iterations);
  void column_times_binv(int j, Eigen::VectorXd& out) const;
  double column_dot(int j, const Eigen::VectorXd& y) const;

  int m_;
  Eigen::VectorXd b_;
  std::vector<std::vector<int>> col_index_;
  std::vector<std::vector<double>> col_value_;
  std::vector<double> cost_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> x_;
  std::vector<State> state_;
  std::vector<int> head_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd pi_;
  Eigen::VectorXd alpha_;
  Phase phase_ = Phase::NoBasis;
  int since_refactor_ = 0;
  double pivot_tol_ = 1e-9;
  long iterations_ = 0;
};

}  // namespace lmpc::detail
