#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <random>

#include "lmpc/geometry.hpp"

namespace lmpc {

/// x₊ = A x + B u + w with w ∈ W, x ∈ X, u ∈ U.
struct LtiSystem {
  Mat A;
  Mat B;
  Box W;
  HPolytope X;
  HPolytope U;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  /// Shapes, finiteness, bounded X/U and W, X, U containing the origin.
  void validate() const;
};

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a tuple of integers, used to derive independent RNG streams.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec step(const LtiSystem& sys, const Vec& x, const Vec& u, const Vec& w);
Vec sample_disturbance(const Box& W, Rng& rng);
inline Vec sample_disturbance(const LtiSystem& sys, Rng& rng) { return sample_disturbance(sys.W, rng); }

struct LqrGain {
  Mat K;  // u = K x
  Mat P;
  int iterations = 0;
};

/// Riccati fixed-point iteration until ‖P₊ − P‖∞ ≤ 1e-12.
LqrGain dlqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, int max_iterations = 1000000);
/// ‖AᵀPA − P + Q − AᵀPB (R + BᵀPB)⁻¹ BᵀPA‖∞
double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P);
double spectral_radius(const Mat& M);

struct MrpiResult {
  VPolytope set;
  int horizon = 0;     // s
  double alpha = 0.0;  // Acl^s W ⊆ α W
};

/// (1 − α)⁻¹ ⊕_{i<s} Acl^i W with the smallest s such that α(s) ≤ contraction_tol.
/// W must be symmetric about the origin in the box sense (center 0).
MrpiResult mrpi_approx(const Mat& Acl, const Box& W, double contraction_tol = 0.01, int max_horizon = 200);

struct GoalSetData {
  Mat K;
  VPolytope O;
  HPolytope O_hrep;  // same set, used for fast membership
  VPolytope KO;
  double invariance_margin = 0.0;  // measured max 1-norm violation over vertex pairs
  int mrpi_horizon = 0;
  double mrpi_alpha = 0.0;
  // Closed-form |·|_O and |·|_KO, present when the sets are at most 2D.
  std::optional<L1DistanceFunction> dist_O;
  std::optional<L1DistanceFunction> dist_KO;

  bool in_goal(const Vec& x, double tol = 1e-7) const { return contains(O_hrep, x, tol); }
};

/// Max over vertices v of O and w of W of |(A + BK)v + w|_O.
double invariance_violation(const Mat& Acl, const Box& W, const VPolytope& O);

/// dlqr gain, mRPI set and KO. Requires a 2D state for the H-rep membership cache.
GoalSetData build_goal_set(const LtiSystem& sys, const Mat& Q, const Mat& R, double contraction_tol = 0.01);

/// Robust invariance of O on vertices (≤ 1e-8) and K v ∈ U for every vertex v.
bool check_assumption1(const GoalSetData& goal, const LtiSystem& sys, double tol = 1e-8);

struct StageCost {
  double state_weight = 1.0;
  double input_weight = 1.0;
  std::shared_ptr<const GoalSetData> goal;
};

/// q_x |x|_O + q_u |u|_KO.
double stage_cost(const StageCost& c, const Vec& x, const Vec& u);

}  // namespace lmpc
