#pragma once

#include "gks/common.hpp"

namespace gks {

/// Relative cutoff below which singular values count as zero.
inline constexpr double kPinvTol = 1e-10;

/// Eigendecomposition of a symmetric matrix with small eigenvalues
/// (|λ| < tol·max|λ|) snapped to zero.
struct SymSpectrum {
  Vec values;
  Mat vectors;
  Eigen::Index rank = 0;
};

SymSpectrum sym_spectrum(const Mat& s, double rel_tol = kPinvTol);

Mat sym_pinv(const Mat& s, double rel_tol = kPinvTol);

/// Symmetric square root of the pseudoinverse, (S†)^{1/2}.
Mat sym_pinv_sqrt(const Mat& s, double rel_tol = kPinvTol);

/// L with S = L Lᵀ and L of full column rank (n × rank).
Mat psd_factor(const Mat& s, double rel_tol = kPinvTol);

/// Orthonormal basis for null(S), n × (n − rank).
Mat null_basis(const Mat& s, double rel_tol = kPinvTol);

bool is_symmetric(const Mat& s, double rel_tol = 1e-12);

}  // namespace gks
