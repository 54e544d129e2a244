#pragma once

#include "gks/common.hpp"
#include "gks/statespace.hpp"

#include <functional>
#include <vector>

namespace gks {

/// Symmetric block-tridiagonal operator. F_seq[t] (t = 0..N) are the
/// diagonal blocks; G_seq[t] (t = 0..N-1) sits at block (t+1, t) and its
/// transpose at (t, t+1).
struct BlockTridiag {
  std::size_t n = 0, N = 0;
  std::vector<Mat> F_seq;
  std::vector<Mat> G_seq;

  std::size_t dim() const { return n * (N + 1); }
  static BlockTridiag identity(std::size_t n, std::size_t N);
};

/// Normal equations of the stacked least-squares problem:
/// T = CᵀR⁻¹C + AᵀQ⁻¹A,  r = CᵀR⁻¹y + AᵀQ⁻¹z.
struct NormalEquations {
  BlockTridiag T;
  Vec r;
};

/// Requires invertible Π, Q_t and (observed) R_t; throws SingularBlock{t}
/// otherwise (t indexes the Q_big / R_big block).
NormalEquations assemble_normal_equations(const StackedSystem& sys);

/// a·CᵀWr²C + b·AᵀWq²A + c·I using the (pseudo)inverse weights stored in the
/// stacked system. No invertibility checks.
BlockTridiag assemble_weighted(const StackedSystem& sys, double a, double b, double c = 0.0);

Vec matvec(const BlockTridiag& T, const Vec& x);

/// Forward block elimination followed by back substitution.
Vec solve_rts(const BlockTridiag& T, const Vec& r);

/// Two-filter scheme: independent forward and backward eliminations combined
/// per block. `parallel` runs the two sweeps on separate threads.
Vec solve_mf(const BlockTridiag& T, const Vec& r, bool parallel = false);

/// Forward-eliminated pivots d_t^f (Cholesky-factored) and the coupling blocks.
struct BtdFactorization {
  std::size_t n = 0, N = 0;
  std::vector<Eigen::LLT<Mat>> pivots;
  std::vector<Mat> G_seq;
};

/// Relative PD tolerance of the pivot check (λ_min > tol·‖F_t‖).
inline constexpr double kPdTol = 1e-12;

/// pd_tol = 0 only requires the Cholesky factorizations to succeed.
BtdFactorization factor(const BlockTridiag& T, double pd_tol = kPdTol);
Vec solve_factored(const BtdFactorization& f, const Vec& r);

struct PowerIterationResult {
  double estimate = 0.0;     ///< final Rayleigh quotient
  double upper_bound = 0.0;  ///< estimate inflated by 5%
  bool converged = false;
  int iterations = 0;
};

using LinearOperator = std::function<Vec(const Vec&)>;

/// Largest eigenvalue of a symmetric PSD operator. The start vector is a fixed
/// deterministic sequence so results are reproducible.
PowerIterationResult power_iteration(const LinearOperator& op, std::size_t dim, int iters = 1000,
                                     double tol = 1e-10);

}  // namespace gks
