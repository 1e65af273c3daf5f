#pragma once

// Brute-force reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  if (k > n) return;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// min cᵀz s.t. A z ≤ b by enumerating all basic solutions. Assumes the feasible set is bounded.
inline std::optional<double> lp_vertex_enumeration(const Vec& c, const Mat& A, const Vec& b, Vec* argmin = nullptr) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  std::optional<double> best;
  for_each_subset(m, n, [&](const std::vector<int>& rows) {
    Mat M(n, n);
    Vec r(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = A.row(rows[i]);
      r[i] = b[rows[i]];
    }
    Eigen::FullPivLU<Mat> lu(M);
    if (!lu.isInvertible()) return;
    const Vec z = lu.solve(r);
    if (((A * z - b).array() > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff())).any()) return;
    const double v = c.dot(z);
    if (!best || v < *best) {
      best = v;
      if (argmin) *argmin = z;
    }
  });
  return best;
}

/// min ‖D z − f‖² s.t. G z ≥ h by trying every active set; D must have full column rank.
inline std::optional<Vec> cls_active_set_enumeration(const Mat& D, const Vec& f, const Mat& G, const Vec& h) {
  const int n = static_cast<int>(D.cols());
  const int m = static_cast<int>(G.rows());
  std::optional<Vec> best;
  double best_val = std::numeric_limits<double>::infinity();
  const Mat H = D.transpose() * D;
  const Vec q = D.transpose() * f;
  for (int k = 0; k <= std::min(n, m); ++k) {
    for_each_subset(m, k, [&](const std::vector<int>& rows) {
      // KKT system [H  Gwᵀ; Gw 0] [z; -λ] = [q; h_w]
      Mat K = Mat::Zero(n + k, n + k);
      Vec r(n + k);
      K.topLeftCorner(n, n) = H;
      r.head(n) = q;
      for (int i = 0; i < k; ++i) {
        K.block(0, n + i, n, 1) = G.row(rows[i]).transpose();
        K.block(n + i, 0, 1, n) = G.row(rows[i]);
        r[n + i] = h[rows[i]];
      }
      Eigen::FullPivLU<Mat> lu(K);
      if (!lu.isInvertible()) return;
      const Vec sol = lu.solve(r);
      const Vec z = sol.head(n);
      if (((G * z - h).array() < -1e-9).any()) return;
      const double v = (D * z - f).squaredNorm();
      if (v < best_val) {
        best_val = v;
        best = z;
      }
    });
  }
  return best;
}

/// x ∈ conv(P) in 2D iff x lies in a point, segment or triangle spanned by P.
inline bool in_hull_2d(const std::vector<Vec>& pts, const Vec& x, double tol = 1e-9) {
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    if ((pts[i] - x).norm() <= tol) return true;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec d = pts[j] - pts[i];
      const double len2 = d.squaredNorm();
      if (len2 == 0.0) continue;
      const double t = std::clamp((x - pts[i]).dot(d) / len2, 0.0, 1.0);
      if ((pts[i] + t * d - x).norm() <= tol) return true;
      for (int k = j + 1; k < n; ++k) {
        Mat M(2, 2);
        M.col(0) = pts[j] - pts[i];
        M.col(1) = pts[k] - pts[i];
        if (std::abs(M.determinant()) < 1e-14) continue;
        const Vec l = M.partialPivLu().solve(x - pts[i]);
        if (l[0] >= -tol && l[1] >= -tol && l[0] + l[1] <= 1.0 + tol) return true;
      }
    }
  }
  return false;
}

/// min ‖x − d‖₁ over d on the boundary of a counter-clockwise 2D polygon, by dense sampling.
inline double l1_distance_by_sampling(const Mat& ccw_vertices, const Vec& x, int steps = 20000) {
  double best = std::numeric_limits<double>::infinity();
  const int k = static_cast<int>(ccw_vertices.cols());
  for (int i = 0; i < k; ++i) {
    const Vec a = ccw_vertices.col(i);
    const Vec b = ccw_vertices.col((i + 1) % k);
    for (int s = 0; s <= steps; ++s) {
      const Vec q = a + (b - a) * (static_cast<double>(s) / steps);
      best = std::min(best, (x - q).lpNorm<1>());
    }
  }
  return best;
}

/// Lower convex envelope of (pᵢ, cᵢ) at x in 2D: by Carathéodory the optimum of the
/// convex-multiplier LP uses at most three points, so enumerate points, segments and triangles.
inline std::optional<double> lower_envelope_2d(const std::vector<Vec>& pts, const std::vector<double>& c, const Vec& x,
                                               double tol = 1e-10) {
  const int n = static_cast<int>(pts.size());
  std::optional<double> best;
  auto offer = [&](double v) {
    if (!best || v < *best) best = v;
  };
  for (int i = 0; i < n; ++i) {
    if ((pts[i] - x).norm() <= tol) offer(c[i]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec d = pts[j] - pts[i];
      const double len2 = d.squaredNorm();
      if (len2 == 0.0) continue;
      const double t = (x - pts[i]).dot(d) / len2;
      if (t >= -tol && t <= 1.0 + tol && (pts[i] + t * d - x).norm() <= tol) offer((1 - t) * c[i] + t * c[j]);
      for (int k = j + 1; k < n; ++k) {
        Mat M(2, 2);
        M.col(0) = pts[j] - pts[i];
        M.col(1) = pts[k] - pts[i];
        if (std::abs(M.determinant()) < 1e-14) continue;
        const Vec l = M.partialPivLu().solve(x - pts[i]);
        if (l[0] >= -tol && l[1] >= -tol && l[0] + l[1] <= 1.0 + tol) {
          offer((1 - l[0] - l[1]) * c[i] + l[0] * c[j] + l[1] * c[k]);
        }
      }
    }
  }
  return best;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace oracle
