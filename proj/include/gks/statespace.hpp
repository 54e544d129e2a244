#pragma once

#include "gks/common.hpp"
#include "gks/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gks {

/// Time-varying linear model
///   x_{t+1} = A_t x_t + B_t u_t + v_t,   t = 0..N-1
///   y_k     = C_k x_k + e_k,             k = 1..N
/// Index k of C_seq/R_seq/y_seq holds time k+1. Q_seq[t] = Cov(v_t).
/// S_seq[t] = Cov(v_t, e_t) (n×m) for t ≥ 1; entry 0 is ignored because v_0
/// is independent of the measurements.
struct LtvModel {
  std::size_t N = 0, n = 0, m = 0, p = 0;
  std::vector<Mat> A_seq, B_seq, C_seq, Q_seq, R_seq, S_seq;
  Vec mu;
  Mat Pi;
  std::vector<Vec> u_seq, y_seq;
  /// Extra known additive term in the transition (empty means zero).
  /// decorrelate() folds the output injection S_t R_t† y_t in here.
  std::vector<Vec> offset_seq;
  /// Measurement mask (empty means all observed). Unobserved rows drop out.
  std::vector<bool> observed;

  bool is_observed(std::size_t k) const { return observed.empty() || observed[k]; }
};

enum class ViolationCode { LengthMismatch, DimMismatch, NonFinite, NotSymmetric, NotPsd, JointNotPsd };

struct Violation {
  ViolationCode code;
  std::string field;
  std::size_t t = 0;

  std::string to_string() const;
  bool operator==(const Violation&) const = default;
};

const char* to_string(ViolationCode code);

/// Every invariant violation of the model; empty when valid.
std::vector<Violation> validate(const LtvModel& model);

/// Time-local linear row:  curᵀ x_block + prevᵀ x_{block-1}  (=|≤)  rhs.
/// `prev` is empty when the row only touches one block.
struct LocalRow {
  std::size_t block = 0;
  Vec cur;
  Vec prev;
  double rhs = 0.0;
};

/// Block-structured stacked system. Nothing is materialized dense.
///   A_big: identity diagonal blocks, -A_t on block (t+1, t)
///   C_big: block (k, k+1) = C_k
///   Q_big = diag(Π, Q_0..Q_{N-1}),  R_big = diag(R_1..R_N)
///   z = (μ, B_0u_0 + o_0, ..., B_{N-1}u_{N-1} + o_{N-1})
/// Wq/Wr are symmetric (pseudo)inverse square roots of the covariance blocks;
/// Wr is zero for unobserved times.
struct StackedSystem {
  std::size_t n = 0, m = 0, N = 0;
  std::vector<Mat> A_blocks;
  std::vector<Mat> C_blocks;
  std::vector<Mat> Q_blocks;
  std::vector<Mat> R_blocks;
  Vec z, y;
  std::vector<Mat> Wq;
  std::vector<Mat> Wr;
  /// Nullspace equality rows coming from singular covariance blocks.
  std::vector<LocalRow> equalities;

  std::size_t state_dim() const { return n * (N + 1); }
  std::size_t meas_dim() const { return m * N; }
};

StackedSystem stack(const LtvModel& model);

Vec apply_A(const StackedSystem& sys, const Vec& x);
Vec apply_At(const StackedSystem& sys, const Vec& w);
Vec apply_C(const StackedSystem& sys, const Vec& x);
Vec apply_Ct(const StackedSystem& sys, const Vec& w);
Vec apply_Wq(const StackedSystem& sys, const Vec& w);
Vec apply_Wr(const StackedSystem& sys, const Vec& w);

/// Wr (y - C x)
Vec measurement_residual(const StackedSystem& sys, const Vec& x);
/// Wq (z - A x)
Vec process_residual(const StackedSystem& sys, const Vec& x);

/// ‖R^{-1/2}(y - Cx)‖² + ‖Q^{-1/2}(z - Ax)‖² (no ½ factors).
double least_squares_objective(const StackedSystem& sys, const Vec& x);

/// Removes cross-covariances:
///   Ã_t = A_t - S_t R_t† C_t,  Q̃_t = Q_t - S_t R_t† S_tᵀ,  o_t += S_t R_t† y_t.
LtvModel decorrelate(const LtvModel& model);

/// Pseudoinverse weights and nullspace projectors. Q_pinv/Q_perp have N+1
/// entries with index 0 holding Π; index t+1 holds (decorrelated) Q_t.
struct PseudoWeights {
  std::vector<Mat> R_pinv, R_perp;
  std::vector<Mat> Q_pinv, Q_perp;
  std::vector<LocalRow> equalities;
};

PseudoWeights pseudo_weights(const LtvModel& model);

enum class NoiseKind { None, Gaussian, BernoulliGaussian, GaussianMixture };

/// Distribution of unit-variance draws ξ that are then shaped by a factor of
/// the covariance (v = Lξ with Q = LLᵀ).
///   BernoulliGaussian(α): ξ = 0 w.p. 1-α, else N(0, 1/α).
///   GaussianMixture(α, f): (1-α)N(0, s²) + αN(0, (f s)²), s² = 1/((1-α)+αf²).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double alpha = 0.0;
  double factor = 1.0;
};

double standardized_draw(const NoiseSpec& spec, Rng& rng);

/// (1-α)σ² + α(fσ)²
double mixture_variance(double alpha, double sigma, double factor);

struct Trajectory {
  std::vector<Vec> x;  ///< N+1 states
  std::vector<Vec> y;  ///< N measurements (times 1..N)
  std::vector<Vec> v;  ///< N process noise draws
  std::vector<Vec> e;  ///< N measurement noise draws
};

/// Draws x_0 = μ + Π^{1/2}ξ and propagates the model. Pairs (v_t, e_t) with
/// nonzero S_t are drawn jointly Gaussian.
Trajectory simulate(const LtvModel& model, const NoiseSpec& process, const NoiseSpec& measurement,
                    std::uint64_t seed);

/// Classic covariance-form Kalman filter + RTS smoother. Pseudoinverses of the
/// innovation and predicted covariances make it valid for singular Q, R, Π.
std::vector<Vec> kalman_smooth(const LtvModel& model);

Vec flatten(const std::vector<Vec>& blocks);
std::vector<Vec> unflatten(const Vec& x, std::size_t block_size);

}  // namespace gks
