#include "simplex_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmpc/errors.hpp"

namespace lmpc::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;

}  // namespace

SimplexEngine::SimplexEngine(Eigen::VectorXd b) : m_(static_cast<int>(b.size())), b_(std::move(b)) {
  for (int r = 0; r < m_; ++r) {
    col_index_.push_back({r});
    col_value_.push_back({1.0});
    cost_.push_back(0.0);
    lo_.push_back(0.0);
    hi_.push_back(kInf);
    x_.push_back(0.0);
    state_.push_back(State::AtLower);
  }
  head_.assign(m_, -1);
  pi_ = Eigen::VectorXd::Zero(m_);
  alpha_ = Eigen::VectorXd::Zero(m_);
}

int SimplexEngine::add_column(const std::vector<int>& index, const std::vector<double>& value,
                              double cost, double lo, double hi) {
  const int j = static_cast<int>(cost_.size());
  col_index_.push_back(index);
  col_value_.push_back(value);
  cost_.push_back(cost);
  lo_.push_back(lo);
  hi_.push_back(hi);
  double x0 = 0.0;
  State s = State::FreeZero;
  if (std::isfinite(lo)) {
    x0 = lo;
    s = State::AtLower;
  } else if (std::isfinite(hi)) {
    x0 = hi;
    s = State::AtUpper;
  }
  x_.push_back(x0);
  state_.push_back(s);
  if (phase_ != Phase::NoBasis && x0 != 0.0) {
    // Nonbasic at a nonzero bound shifts the basic solution; restart from scratch.
    phase_ = Phase::NoBasis;
  }
  return j - artificial_count();
}

double SimplexEngine::phase_cost(int j) const {
  if (phase_ == Phase::Phase1) return j < m_ ? 1.0 : 0.0;
  return j < m_ ? 0.0 : cost_[j];
}

double SimplexEngine::column_dot(int j, const Eigen::VectorXd& y) const {
  const auto& idx = col_index_[j];
  const auto& val = col_value_[j];
  double s = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * y[idx[k]];
  return s;
}

void SimplexEngine::column_times_binv(int j, Eigen::VectorXd& out) const {
  out.setZero();
  const auto& idx = col_index_[j];
  const auto& val = col_value_[j];
  for (std::size_t k = 0; k < idx.size(); ++k) out.noalias() += val[k] * binv_.col(idx[k]);
}

double SimplexEngine::reduced_cost(int j) const {
  const int jj = artificial_count() + j;
  return cost_[jj] - column_dot(jj, pi_);
}

double SimplexEngine::objective() const {
  double s = 0.0;
  for (std::size_t j = m_; j < cost_.size(); ++j) s += cost_[j] * x_[j];
  return s;
}

void SimplexEngine::start_phase1() {
  const int n = static_cast<int>(cost_.size());
  Eigen::VectorXd residual = b_;
  for (int j = m_; j < n; ++j) {
    if (std::isfinite(lo_[j])) {
      x_[j] = lo_[j];
      state_[j] = State::AtLower;
    } else if (std::isfinite(hi_[j])) {
      x_[j] = hi_[j];
      state_[j] = State::AtUpper;
    } else {
      x_[j] = 0.0;
      state_[j] = State::FreeZero;
    }
    if (x_[j] != 0.0) {
      const auto& idx = col_index_[j];
      const auto& val = col_value_[j];
      for (std::size_t k = 0; k < idx.size(); ++k) residual[idx[k]] -= val[k] * x_[j];
    }
  }
  binv_ = Eigen::MatrixXd::Zero(m_, m_);
  for (int r = 0; r < m_; ++r) {
    const double sign = residual[r] >= 0.0 ? 1.0 : -1.0;
    col_value_[r][0] = sign;
    lo_[r] = 0.0;
    hi_[r] = kInf;
    x_[r] = std::abs(residual[r]);
    state_[r] = State::Basic;
    head_[r] = r;
    binv_(r, r) = sign;
  }
  since_refactor_ = 0;
  phase_ = Phase::Phase1;
}

bool SimplexEngine::refactor() {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m_, m_);
  for (int r = 0; r < m_; ++r) {
    const int j = head_[r];
    const auto& idx = col_index_[j];
    const auto& val = col_value_[j];
    for (std::size_t k = 0; k < idx.size(); ++k) basis(idx[k], r) = val[k];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
  if (!lu.isInvertible()) return false;
  binv_ = lu.inverse();

  Eigen::VectorXd rhs = b_;
  const int n = static_cast<int>(cost_.size());
  for (int j = 0; j < n; ++j) {
    if (state_[j] == State::Basic || x_[j] == 0.0) continue;
    const auto& idx = col_index_[j];
    const auto& val = col_value_[j];
    for (std::size_t k = 0; k < idx.size(); ++k) rhs[idx[k]] -= val[k] * x_[j];
  }
  const Eigen::VectorXd xb = binv_ * rhs;
  for (int r = 0; r < m_; ++r) x_[head_[r]] = xb[r];
  since_refactor_ = 0;
  return true;
}

void SimplexEngine::compute_duals() {
  Eigen::VectorXd cb(m_);
  for (int r = 0; r < m_; ++r) cb[r] = phase_cost(head_[r]);
  pi_.noalias() = binv_.transpose() * cb;
}

SimplexEngine::Result SimplexEngine::iterate(long max_iterations) {
  const int n = static_cast<int>(cost_.size());
  int degenerate_run = 0;
  bool bland = false;
  long local = 0;

  while (true) {
    if (since_refactor_ >= kRefactorPeriod && !refactor()) return Result::Singular;
    compute_duals();

    // Pricing.
    int q = -1;
    double dir = 0.0;
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      const State s = state_[j];
      if (s == State::Basic || lo_[j] == hi_[j]) continue;
      const double d = phase_cost(j) - column_dot(j, pi_);
      double gain = 0.0;
      double dj = 0.0;
      if (s == State::AtLower) {
        if (d < -kDualTol) { gain = -d; dj = 1.0; }
      } else if (s == State::AtUpper) {
        if (d > kDualTol) { gain = d; dj = -1.0; }
      } else {
        if (std::abs(d) > kDualTol) { gain = std::abs(d); dj = d < 0.0 ? 1.0 : -1.0; }
      }
      if (dj == 0.0) continue;
      if (bland) {
        q = j;
        dir = dj;
        break;
      }
      if (gain > best) {
        best = gain;
        q = j;
        dir = dj;
      }
    }
    if (q < 0) return Result::Optimal;

    if (local >= max_iterations) return Result::IterationLimit;
    ++local;
    ++iterations_;

    column_times_binv(q, alpha_);

    // Ratio test (Harris two-pass; textbook with lowest-index ties under Bland).
    const double flip = (std::isfinite(lo_[q]) && std::isfinite(hi_[q])) ? hi_[q] - lo_[q] : kInf;
    int leave = -1;
    double theta = kInf;
    if (!bland) {
      double relaxed = flip;
      for (int r = 0; r < m_; ++r) {
        const double delta = dir * alpha_[r];
        const int j = head_[r];
        if (delta > pivot_tol_ && std::isfinite(lo_[j])) {
          relaxed = std::min(relaxed, (x_[j] - lo_[j] + kPrimalTol) / delta);
        } else if (delta < -pivot_tol_ && std::isfinite(hi_[j])) {
          relaxed = std::min(relaxed, (hi_[j] - x_[j] + kPrimalTol) / -delta);
        }
      }
      double biggest = 0.0;
      for (int r = 0; r < m_; ++r) {
        const double delta = dir * alpha_[r];
        const int j = head_[r];
        double ratio = kInf;
        if (delta > pivot_tol_ && std::isfinite(lo_[j])) {
          ratio = (x_[j] - lo_[j]) / delta;
        } else if (delta < -pivot_tol_ && std::isfinite(hi_[j])) {
          ratio = (hi_[j] - x_[j]) / -delta;
        } else {
          continue;
        }
        if (ratio <= relaxed && std::abs(delta) > biggest) {
          biggest = std::abs(delta);
          leave = r;
          theta = ratio;
        }
      }
    } else {
      for (int r = 0; r < m_; ++r) {
        const double delta = dir * alpha_[r];
        const int j = head_[r];
        double ratio = kInf;
        if (delta > pivot_tol_ && std::isfinite(lo_[j])) {
          ratio = (x_[j] - lo_[j]) / delta;
        } else if (delta < -pivot_tol_ && std::isfinite(hi_[j])) {
          ratio = (hi_[j] - x_[j]) / -delta;
        } else {
          continue;
        }
        ratio = std::max(ratio, 0.0);
        if (ratio < theta - 1e-12 || (std::abs(ratio - theta) <= 1e-12 && leave >= 0 && j < head_[leave])) {
          theta = ratio;
          leave = r;
        }
      }
    }

    if (leave < 0 && !std::isfinite(flip)) return Result::Unbounded;

    if (leave < 0 || flip <= theta) {
      // Bound flip of the entering variable.
      const double step = flip;
      x_[q] += dir * step;
      state_[q] = dir > 0.0 ? State::AtUpper : State::AtLower;
      x_[q] = dir > 0.0 ? hi_[q] : lo_[q];
      for (int r = 0; r < m_; ++r) x_[head_[r]] -= dir * step * alpha_[r];
      degenerate_run = 0;
      bland = false;
      continue;
    }

    theta = std::max(theta, 0.0);
    x_[q] += dir * theta;
    for (int r = 0; r < m_; ++r) x_[head_[r]] -= dir * theta * alpha_[r];

    const int out = head_[leave];
    const double delta = dir * alpha_[leave];
    if (delta > 0.0) {
      x_[out] = lo_[out];
      state_[out] = State::AtLower;
    } else {
      x_[out] = hi_[out];
      state_[out] = State::AtUpper;
    }
    if (!std::isfinite(x_[out])) {
      x_[out] = 0.0;
      state_[out] = State::FreeZero;
    }

    // Basis inverse update.
    const double pivot = alpha_[leave];
    Eigen::RowVectorXd pivot_row = binv_.row(leave) / pivot;
    binv_.noalias() -= alpha_ * pivot_row;
    binv_.row(leave) = pivot_row;
    head_[leave] = q;
    state_[q] = State::Basic;
    ++since_refactor_;

    if (theta <= 1e-12) {
      if (++degenerate_run > kDegenerateSwitch) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
  }
}

SimplexEngine::Result SimplexEngine::solve(long max_iterations) {
  iterations_ = 0;
  Result r = run(max_iterations);
  // Accumulated update error: restart from the artificial basis with a stricter pivot threshold.
  for (int attempt = 0; r == Result::Singular && attempt < 2; ++attempt) {
    pivot_tol_ *= 100.0;
    phase_ = Phase::NoBasis;
    r = run(max_iterations - iterations_);
  }
  pivot_tol_ = kPivotTol;
  if (r == Result::Singular) throw Error(ErrorCode::NumericalFailure, "singular simplex basis");
  return r;
}

SimplexEngine::Result SimplexEngine::run(long max_iterations) {
  const long start = iterations_;
  if (phase_ == Phase::NoBasis) start_phase1();
  if (phase_ == Phase::Phase1) {
    const Result r = iterate(max_iterations);
    if (r != Result::Optimal) return r;
    if (!refactor()) return Result::Singular;
    double infeasibility = 0.0;
    for (int i = 0; i < m_; ++i) infeasibility += std::abs(x_[i]);
    const double scale = std::max(1.0, b_.cwiseAbs().maxCoeff());
    if (infeasibility > 1e-9 * scale * std::max(1, m_)) {
      phase_ = Phase::NoBasis;
      return Result::Infeasible;
    }
    for (int i = 0; i < m_; ++i) {
      hi_[i] = 0.0;
      if (state_[i] != State::Basic) {
        x_[i] = 0.0;
        state_[i] = State::AtLower;
      }
    }
    phase_ = Phase::Phase2;
  }
  const Result r = iterate(max_iterations - (iterations_ - start));
  if (r == Result::Optimal) {
    if (!refactor()) return Result::Singular;
    compute_duals();
  }
  return r;
}

}  // namespace lmpc::detail
