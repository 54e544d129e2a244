#pragma once

#include "gks/blocktridiag.hpp"
#include "gks/statespace.hpp"

#include <vector>

namespace gks {

inline constexpr double kSaddleRankTol = 1e-13;

/// Factorization of the equality-constrained system
///   [ T   E ] [x]   [r]
///   [ Eᵀ  0 ] [λ] = [e]
/// where T is block tridiagonal and every column of E is a time-local row
/// (touches x_k and possibly x_{k-1}). Unknowns are interleaved per block as
/// [x_k; λ_k] and eliminated with block LU, so the cost stays O(N·b³).
class SaddleFactorization {
 public:
  /// A pivot block counts as singular when its smallest LU pivot is at most
  /// rank_tol times the largest one.
  SaddleFactorization(const BlockTridiag& T, const std::vector<LocalRow>& rows, double rank_tol = kSaddleRankTol);

  /// Returns x; λ is written to `lambda` when non-null (ordered like `rows`).
  Vec solve(const Vec& r, const Vec& e, Vec* lambda = nullptr) const;

  std::size_t rows() const { return row_count_; }

 private:
  std::size_t n_ = 0, N_ = 0, row_count_ = 0;
  std::vector<std::vector<std::size_t>> block_rows_;  // row indices per block
  std::vector<Mat> sub_;                              // Sub_k at (k, k-1), k ≥ 1
  std::vector<Eigen::FullPivLU<Mat>> pivots_;         // eliminated diagonal blocks
};

}  // namespace gks
