#include "lmpc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lmpc {

namespace {

void require_dim(int a, int b, const char* what) {
  if (a != b) throw Error(ErrorCode::DimensionMismatch, what);
}

double cross(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Mat stack_columns(const std::vector<Vec>& cols, int dim) {
  Mat m(dim, static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) m.col(static_cast<int>(i)) = cols[i];
  return m;
}

std::vector<Vec> dedupe_sorted(const Mat& points) {
  std::vector<Vec> pts;
  pts.reserve(points.cols());
  for (int i = 0; i < points.cols(); ++i) {
    if (!points.col(i).allFinite()) throw Error(ErrorCode::NumericalFailure, "non-finite point");
    pts.push_back(points.col(i));
  }
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    for (int k = 0; k < a.size(); ++k) {
      if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
  });
  std::vector<Vec> out;
  for (const Vec& p : pts) {
    bool dup = false;
    // Sorted by the first coordinate, so near-duplicates are within a short window.
    for (auto it = out.rbegin(); it != out.rend() && p[0] - (*it)[0] <= kDedupTol; ++it) {
      if ((p - *it).cwiseAbs().maxCoeff() <= kDedupTol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  return out;
}

}  // namespace

void Box::validate() const {
  if (center.size() != radius.size()) throw Error(ErrorCode::DimensionMismatch, "box center/radius");
  if (!center.allFinite() || !radius.allFinite()) throw Error(ErrorCode::NumericalFailure, "non-finite box");
  if (radius.size() && radius.minCoeff() < 0.0) throw Error(ErrorCode::NumericalFailure, "negative box radius");
}

HPolytope HPolytope::from_box(const Box& box) {
  box.validate();
  const int n = box.dim();
  HPolytope p;
  p.A = Mat::Zero(2 * n, n);
  p.b = Vec(2 * n);
  for (int i = 0; i < n; ++i) {
    p.A(2 * i, i) = 1.0;
    p.b[2 * i] = box.center[i] + box.radius[i];
    p.A(2 * i + 1, i) = -1.0;
    p.b[2 * i + 1] = -(box.center[i] - box.radius[i]);
  }
  return p;
}

void check_nonempty_bounded(const HPolytope& p) {
  const int n = p.dim();
  for (int i = 0; i < n; ++i) {
    support(p, Vec::Unit(n, i));
    support(p, -Vec::Unit(n, i));
  }
}

Mat box_vertices(const Box& box) {
  box.validate();
  const int n = box.dim();
  if (n > 16) throw Error(ErrorCode::DimensionTooLarge, "box_vertices supports at most 16 dimensions");
  std::vector<int> free_axes;
  for (int i = 0; i < n; ++i) {
    if (box.radius[i] > 0.0) free_axes.push_back(i);
  }
  const int k = static_cast<int>(free_axes.size());
  Mat v(n, 1 << k);
  for (int mask = 0; mask < (1 << k); ++mask) {
    Vec x = box.center;
    for (int a = 0; a < k; ++a) {
      const int i = free_axes[a];
      x[i] += (mask >> a & 1) ? box.radius[i] : -box.radius[i];
    }
    v.col(mask) = x;
  }
  return v;
}

VPolytope to_vpolytope(const Box& box) { return convex_hull(box_vertices(box)); }

VPolytope convex_hull_2d(const std::vector<Vec>& points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "convex hull of no points");
  return convex_hull_2d(stack_columns(points, static_cast<int>(points[0].size())));
}

VPolytope convex_hull_2d(const Mat& points) {
  if (points.cols() == 0) throw Error(ErrorCode::EmptyInput, "convex hull of no points");
  require_dim(static_cast<int>(points.rows()), 2, "convex_hull_2d needs 2D points");
  const std::vector<Vec> pts = dedupe_sorted(points);
  const int n = static_cast<int>(pts.size());
  if (n <= 2) return {stack_columns(pts, 2)};

  // Andrew's monotone chain; pops collinear and reflex points.
  std::vector<Vec> hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= kCollinearTol) --k;
    hull[k++] = pts[i];
  }
  for (int i = n - 2, lower = k + 1; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= kCollinearTol) --k;
    hull[k++] = pts[i];
  }
  hull.resize(std::max(1, k - 1));
  if (hull.size() == 2 && (hull[0] - hull[1]).cwiseAbs().maxCoeff() <= kDedupTol) hull.resize(1);
  return {stack_columns(hull, 2)};
}

VPolytope convex_hull(const Mat& points) {
  if (points.cols() == 0) throw Error(ErrorCode::EmptyInput, "convex hull of no points");
  const int dim = static_cast<int>(points.rows());
  if (dim == 2) return convex_hull_2d(points);
  if (dim == 1) {
    const double lo = points.minCoeff();
    const double hi = points.maxCoeff();
    if (hi - lo <= kDedupTol) return {Mat::Constant(1, 1, lo)};
    Mat v(1, 2);
    v << lo, hi;
    return {v};
  }
  std::vector<Vec> pts = dedupe_sorted(points);
  for (std::size_t i = 0; i < pts.size() && pts.size() > 1;) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != i) others.push_back(pts[j]);
    }
    if (contains(VPolytope{stack_columns(others, dim)}, pts[i], kDedupTol)) {
      pts.erase(pts.begin() + static_cast<long>(i));
    } else {
      ++i;
    }
  }
  return {stack_columns(pts, dim)};
}

VPolytope minkowski_sum(const VPolytope& p, const VPolytope& q) {
  require_dim(p.dim(), q.dim(), "minkowski_sum dimensions");
  Mat sums(p.dim(), p.size() * q.size());
  for (int i = 0; i < p.size(); ++i) {
    for (int j = 0; j < q.size(); ++j) sums.col(i * q.size() + j) = p.vertices.col(i) + q.vertices.col(j);
  }
  return convex_hull(sums);
}

VPolytope linear_image(const VPolytope& p, const Mat& M) {
  require_dim(static_cast<int>(M.cols()), p.dim(), "linear_image columns");
  return convex_hull(M * p.vertices);
}

double support(const HPolytope& p, const Vec& d) {
  require_dim(static_cast<int>(d.size()), p.dim(), "support direction");
  LinearProgram lp;
  lp.cost = -d;
  lp.G = p.A;
  lp.h = p.b;
  const LpSolution s = solve_lp(lp);
  if (s.status == LpStatus::Unbounded) throw Error(ErrorCode::Unbounded, "support of unbounded polytope");
  if (s.status == LpStatus::Infeasible) throw Error(ErrorCode::NumericalFailure, "support of empty polytope");
  return -s.objective;
}

double support(const VPolytope& p, const Vec& d) {
  require_dim(static_cast<int>(d.size()), p.dim(), "support direction");
  if (p.size() == 0) throw Error(ErrorCode::EmptyInput, "support of empty vertex set");
  return (d.transpose() * p.vertices).maxCoeff();
}

double support(const Box& b, const Vec& d) {
  require_dim(static_cast<int>(d.size()), b.dim(), "support direction");
  return d.dot(b.center) + d.cwiseAbs().dot(b.radius);
}

bool contains(const HPolytope& p, const Vec& x, double tol) {
  require_dim(static_cast<int>(x.size()), p.dim(), "contains point");
  return p.rows() == 0 || (p.A * x - p.b).maxCoeff() <= tol;
}

bool contains(const VPolytope& p, const Vec& x, double tol) {
  require_dim(static_cast<int>(x.size()), p.dim(), "contains point");
  const int n = p.dim();
  const int k = p.size();
  if (k == 0) return false;
  if (k == 1) return (p.vertices.col(0) - x).cwiseAbs().maxCoeff() <= tol;
  LinearProgram lp;
  lp.cost = Vec::Zero(k);
  lp.G = Mat(2 * n, k);
  lp.G.topRows(n) = p.vertices;
  lp.G.bottomRows(n) = -p.vertices;
  lp.h = Vec(2 * n);
  lp.h.head(n) = x.array() + tol;
  lp.h.tail(n) = -x.array() + tol;
  lp.F = Mat::Ones(1, k);
  lp.g = Vec::Ones(1);
  lp.lower = Vec::Zero(k);
  lp.upper = Vec::Constant(k, kInf);
  return solve_lp(lp, LpMethod::Primal).status == LpStatus::Optimal;
}

bool contains(const Box& b, const Vec& x, double tol) {
  require_dim(static_cast<int>(x.size()), b.dim(), "contains point");
  return ((x - b.center).cwiseAbs() - b.radius).maxCoeff() <= tol;
}

namespace {

// Variables [t (n), d (n) or λ (extra)]; rows |x − d| ≤ t.
double l1_distance_lp(const Vec& x, const Mat& point_map, int extra, const Mat& G_extra, const Vec& h_extra,
                      const Mat& F_extra, const Vec& g_extra, const Vec& lower_extra) {
  // d = point_map·λ when extra > 0, otherwise d is free.
  const int n = static_cast<int>(x.size());
  const int nv = (extra == 0 ? 2 * n : n + extra);
  LinearProgram lp;
  lp.cost = Vec::Zero(nv);
  lp.cost.head(n).setOnes();
  lp.G = Mat::Zero(2 * n + G_extra.rows(), nv);
  lp.h = Vec(2 * n + G_extra.rows());
  for (int i = 0; i < n; ++i) {
    // d_i − t_i ≤ x_i and −d_i − t_i ≤ −x_i
    lp.G(2 * i, i) = -1.0;
    lp.G(2 * i + 1, i) = -1.0;
    if (extra == 0) {
      lp.G(2 * i, n + i) = 1.0;
      lp.G(2 * i + 1, n + i) = -1.0;
    } else {
      lp.G.block(2 * i, n, 1, extra) = point_map.row(i);
      lp.G.block(2 * i + 1, n, 1, extra) = -point_map.row(i);
    }
    lp.h[2 * i] = x[i];
    lp.h[2 * i + 1] = -x[i];
  }
  if (G_extra.rows() > 0) {
    lp.G.bottomRows(G_extra.rows()).rightCols(nv - n) = G_extra;
    lp.h.tail(G_extra.rows()) = h_extra;
  }
  if (F_extra.rows() > 0) {
    lp.F = Mat::Zero(F_extra.rows(), nv);
    lp.F.rightCols(nv - n) = F_extra;
    lp.g = g_extra;
  }
  lp.lower = Vec::Constant(nv, -kInf);
  lp.lower.head(n).setZero();
  if (lower_extra.size()) lp.lower.tail(nv - n) = lower_extra;
  const LpSolution s = solve_lp(lp);
  if (s.status != LpStatus::Optimal) throw Error(ErrorCode::NumericalFailure, "distance LP failed");
  return std::max(0.0, s.objective);
}

}  // namespace

double set_distance_l1(const Vec& x, const HPolytope& p) {
  require_dim(static_cast<int>(x.size()), p.dim(), "distance point");
  if (contains(p, x, 0.0)) return 0.0;
  return l1_distance_lp(x, Mat(), 0, p.A, p.b, Mat(), Vec(), Vec());
}

double set_distance_l1(const Vec& x, const VPolytope& p) {
  require_dim(static_cast<int>(x.size()), p.dim(), "distance point");
  if (p.size() == 0) throw Error(ErrorCode::EmptyInput, "distance to empty vertex set");
  if (p.size() == 1) return (x - p.vertices.col(0)).lpNorm<1>();
  const int k = p.size();
  return l1_distance_lp(x, p.vertices, k, Mat(), Vec(), Mat::Ones(1, k), Vec::Ones(1), Vec::Zero(k));
}

HPolytope to_hrep_2d(const VPolytope& p) {
  require_dim(p.dim(), 2, "to_hrep_2d needs a 2D polytope");
  const int k = p.size();
  if (k == 0) throw Error(ErrorCode::EmptyInput, "empty polytope");
  HPolytope h;
  if (k == 1) {
    h = HPolytope::from_box({p.vertices.col(0), Vec::Zero(2)});
    return h;
  }
  if (k == 2) {
    const Vec a = p.vertices.col(0);
    const Vec b = p.vertices.col(1);
    const Vec d = (b - a).normalized();
    Vec nrm(2);
    nrm << -d[1], d[0];
    h.A = Mat(4, 2);
    h.b = Vec(4);
    h.A.row(0) = nrm.transpose();
    h.b[0] = nrm.dot(a);
    h.A.row(1) = -nrm.transpose();
    h.b[1] = -nrm.dot(a);
    h.A.row(2) = d.transpose();
    h.b[2] = d.dot(b);
    h.A.row(3) = -d.transpose();
    h.b[3] = -d.dot(a);
    return h;
  }
  h.A = Mat(k, 2);
  h.b = Vec(k);
  for (int i = 0; i < k; ++i) {
    const Vec a = p.vertices.col(i);
    const Vec b = p.vertices.col((i + 1) % k);
    Vec nrm(2);
    nrm << b[1] - a[1], a[0] - b[0];  // outward for counter-clockwise order
    nrm.normalize();
    h.A.row(i) = nrm.transpose();
    h.b[i] = nrm.dot(a);
  }
  return h;
}

VPolytope to_vrep_2d(const HPolytope& p) {
  require_dim(p.dim(), 2, "to_vrep_2d needs a 2D polytope");
  check_nonempty_bounded(p);
  std::vector<Vec> pts;
  const double scale = std::max(1.0, p.b.cwiseAbs().maxCoeff());
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = i + 1; j < p.rows(); ++j) {
      Mat M(2, 2);
      M.row(0) = p.A.row(i);
      M.row(1) = p.A.row(j);
      if (std::abs(M.determinant()) < 1e-12 * M.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff()) continue;
      Vec r(2);
      r << p.b[i], p.b[j];
      const Vec x = M.partialPivLu().solve(r);
      if (contains(p, x, 1e-9 * scale)) pts.push_back(x);
    }
  }
  if (pts.empty()) throw Error(ErrorCode::NumericalFailure, "no vertices found");
  return convex_hull_2d(pts);
}

double area_2d(const VPolytope& p) {
  require_dim(p.dim(), 2, "area_2d needs a 2D polytope");
  double a = 0.0;
  const int k = p.size();
  for (int i = 0; i < k; ++i) {
    const int j = (i + 1) % k;
    a += p.vertices(0, i) * p.vertices(1, j) - p.vertices(0, j) * p.vertices(1, i);
  }
  return 0.5 * std::abs(a);
}

L1DistanceFunction::L1DistanceFunction(const VPolytope& p) : dim_(p.dim()) {
  if (p.size() == 0) throw Error(ErrorCode::EmptyInput, "distance to empty vertex set");
  if (dim_ > 16) throw Error(ErrorCode::DimensionTooLarge, "L1 distance pieces need ≤ 16 dimensions");
  std::vector<Vec> directions;
  const Mat corners = box_vertices(Box::ball(dim_, 1.0));
  for (int i = 0; i < corners.cols(); ++i) directions.push_back(corners.col(i));
  if (dim_ == 2 && p.size() >= 2) {
    const HPolytope h = to_hrep_2d(p);
    for (int i = 0; i < h.rows(); ++i) {
      const Vec y = h.A.row(i).transpose();
      const double m = y.cwiseAbs().maxCoeff();
      if (m > 0.0) directions.push_back(y / m);
    }
  }
  for (const Vec& y : directions) {
    const double sigma = support(p, y);
    bool duplicate = false;
    for (const Piece& q : pieces_) {
      if ((q.slope - y).cwiseAbs().maxCoeff() <= 1e-12 && std::abs(q.offset - sigma) <= 1e-12) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) pieces_.push_back({y, sigma});
  }
}

double L1DistanceFunction::operator()(const Vec& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "distance point");
  double best = 0.0;
  for (const Piece& q : pieces_) best = std::max(best, q.slope.dot(x) - q.offset);
  return best;
}

}  // namespace lmpc
