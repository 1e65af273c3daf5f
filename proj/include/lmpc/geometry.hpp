#pragma once

#include <vector>

#include "lmpc/optkit.hpp"

namespace lmpc {

inline constexpr double kDedupTol = 1e-9;
inline constexpr double kCollinearTol = 1e-12;

/// Axis-aligned box {x : |x − center| ≤ radius component-wise}.
struct Box {
  Vec center;
  Vec radius;

  int dim() const { return static_cast<int>(center.size()); }
  /// Throws DimensionMismatch / NumericalFailure on inconsistent or negative radii.
  void validate() const;
  static Box ball(int dim, double r) { return {Vec::Zero(dim), Vec::Constant(dim, r)}; }
};

/// {x : A x ≤ b}.
struct HPolytope {
  Mat A;
  Vec b;

  int dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }
  static HPolytope from_box(const Box& box);
};

/// Convex hull of the columns of `vertices` (dim × count). Built through the
/// hull routines, which keep only extreme points.
struct VPolytope {
  Mat vertices;

  int dim() const { return static_cast<int>(vertices.rows()); }
  int size() const { return static_cast<int>(vertices.cols()); }
  Vec vertex(int i) const { return vertices.col(i); }
  static VPolytope point(const Vec& p) { return {p}; }
};

/// Throws NumericalFailure if the set is empty, Unbounded if it is unbounded.
void check_nonempty_bounded(const HPolytope& p);

/// Dimension ≤ 16; directions with zero radius collapse.
Mat box_vertices(const Box& box);
VPolytope to_vpolytope(const Box& box);

/// Points are the columns of `points`. Counter-clockwise extreme points, starting
/// from the lexicographically smallest.
VPolytope convex_hull_2d(const Mat& points);
VPolytope convex_hull_2d(const std::vector<Vec>& points);
/// Any dimension: 1D and 2D are exact sweeps; higher dimensions drop points
/// found inside the hull of the rest by an LP.
VPolytope convex_hull(const Mat& points);

VPolytope minkowski_sum(const VPolytope& p, const VPolytope& q);
VPolytope linear_image(const VPolytope& p, const Mat& M);

double support(const HPolytope& p, const Vec& d);
double support(const VPolytope& p, const Vec& d);
double support(const Box& b, const Vec& d);

bool contains(const HPolytope& p, const Vec& x, double tol = kDedupTol);
/// Convex-multiplier feasibility LP, valid in any dimension.
bool contains(const VPolytope& p, const Vec& x, double tol = kDedupTol);
bool contains(const Box& b, const Vec& x, double tol = kDedupTol);

/// min over d ∈ p of ‖x − d‖₁ (LP).
double set_distance_l1(const Vec& x, const HPolytope& p);
double set_distance_l1(const Vec& x, const VPolytope& p);

/// Edge half-spaces with unit outward normals (degenerate hulls give point/segment rows).
HPolytope to_hrep_2d(const VPolytope& p);
/// Vertices of a bounded 2D H-polytope.
VPolytope to_vrep_2d(const HPolytope& p);

double area_2d(const VPolytope& p);

/// |x|_P written as max(0, maxₖ yₖ·x − σ_P(yₖ)) over a finite set of dual directions
/// y with ‖y‖∞ = 1. The pieces are valid lower bounds in any dimension and give
/// the exact distance in 1D and 2D (corners of the ∞-ball plus edge normals).
class L1DistanceFunction {
 public:
  struct Piece {
    Vec slope;
    double offset;  // value = slope·x − offset
  };

  explicit L1DistanceFunction(const VPolytope& p);

  double operator()(const Vec& x) const;
  const std::vector<Piece>& pieces() const { return pieces_; }
  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<Piece> pieces_;
};

}  // namespace lmpc
