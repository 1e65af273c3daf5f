#include <algorithm>
#include <cmath>
#include <vector>

#include "lmpc/optkit.hpp"

namespace lmpc {

namespace {

Vec find_feasible_point(const Mat& G, const Vec& h, int n) {
  LinearProgram lp;
  lp.cost = Vec::Zero(n);
  lp.G = -G;
  lp.h = -h;
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    throw Error(ErrorCode::Infeasible, "constrained least squares: constraints have no feasible point");
  }
  return sol.z;
}

// Orthonormal basis of {p : G_W p = 0}.
Mat null_space(const Mat& G, const std::vector<int>& working, int n) {
  if (working.empty()) return Mat::Identity(n, n);
  Mat gw(n, static_cast<int>(working.size()));
  for (std::size_t k = 0; k < working.size(); ++k) gw.col(static_cast<int>(k)) = G.row(working[k]).transpose();
  Eigen::HouseholderQR<Mat> qr(gw);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  const int rank = static_cast<int>(working.size());
  return q.rightCols(n - rank);
}

}  // namespace

ClsResult solve_cls(const ConstrainedLsProblem& p, const std::optional<Vec>& start) {
  const int n = static_cast<int>(p.design.cols());
  const int m = static_cast<int>(p.G.rows());
  if (p.design.rows() != p.target.size()) throw Error(ErrorCode::DimensionMismatch, "design/target rows");
  if (m != p.h.size() || (m > 0 && p.G.cols() != n)) throw Error(ErrorCode::DimensionMismatch, "G/h shape");
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no unknowns");

  const double scale = std::max(1.0, p.h.size() ? p.h.cwiseAbs().maxCoeff() : 1.0);
  const double feas_tol = tol::kFeas * scale;

  Vec z;
  if (start && start->size() == n && (m == 0 || (p.G * *start - p.h).minCoeff() >= -feas_tol)) {
    z = *start;
  } else if (m == 0) {
    z = Vec::Zero(n);
  } else {
    z = find_feasible_point(p.G, p.h, n);
  }

  ClsResult result;
  {
    Eigen::ColPivHouseholderQR<Mat> qr(p.design);
    result.degenerate = qr.rank() < n;
  }

  std::vector<int> working;
  std::vector<char> in_working(m, 0);
  const int max_iterations = 20 * (m + n) + 200;
  const double grad_scale = std::max(1.0, p.design.norm() * std::max(1.0, p.target.norm()));
  const double design_scale = std::max(1.0, p.design.cwiseAbs().maxCoeff());
  Vec mu_w;

  for (int it = 0;; ++it) {
    if (it >= max_iterations) throw Error(ErrorCode::NoConvergence, "active-set iteration limit");
    result.iterations = it + 1;

    const Mat Z = null_space(p.G, working, n);
    Vec step = Vec::Zero(n);
    if (Z.cols() > 0) {
      const Vec resid = p.target - p.design * z;
      Mat dz = p.design * Z;
      dz = (dz.array().abs() < 1e-13 * design_scale).select(0.0, dz);
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(dz);
      cod.setThreshold(1e-12);
      step = Z * cod.solve(resid);
    }

    if (step.norm() <= 1e-12 * std::max(1.0, z.norm())) {
      const Vec grad = 2.0 * p.design.transpose() * (p.design * z - p.target);
      if (working.empty()) {
        mu_w.resize(0);
        break;
      }
      Mat gw(n, static_cast<int>(working.size()));
      for (std::size_t k = 0; k < working.size(); ++k) gw.col(static_cast<int>(k)) = p.G.row(working[k]).transpose();
      mu_w = gw.colPivHouseholderQr().solve(grad);
      Eigen::Index worst = 0;
      const double most_negative = mu_w.minCoeff(&worst);
      if (most_negative >= -tol::kKkt * grad_scale) break;
      in_working[working[worst]] = 0;
      working.erase(working.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < m; ++i) {
      if (in_working[i]) continue;
      const double gp = p.G.row(i).dot(step);
      if (gp >= -1e-14 * step.norm() * std::max(1.0, p.G.row(i).norm())) continue;
      const double slack = std::max(0.0, p.G.row(i).dot(z) - p.h[i]);
      const double a = slack / -gp;
      if (a < alpha) {
        alpha = a;
        blocking = i;
      }
    }
    z += alpha * step;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[blocking] = 1;
    }
  }

  result.z = z;
  result.residual = (p.design * z - p.target).squaredNorm();
  result.multipliers = Vec::Zero(m);
  for (std::size_t k = 0; k < working.size(); ++k) result.multipliers[working[k]] = std::max(0.0, mu_w[static_cast<int>(k)]);
  return result;
}

}  // namespace lmpc
