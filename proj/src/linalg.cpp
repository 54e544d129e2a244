#include "gks/linalg.hpp"

#include <cmath>

namespace gks {

SymSpectrum sym_spectrum(const Mat& s, double rel_tol) {
  SymSpectrum out;
  if (s.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  const double scale = out.values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (scale == 0.0 || std::abs(out.values(i)) < rel_tol * scale) {
      out.values(i) = 0.0;
    } else {
      ++out.rank;
    }
  }
  return out;
}

Mat sym_pinv(const Mat& s, double rel_tol) {
  const SymSpectrum sp = sym_spectrum(s, rel_tol);
  Vec inv = Vec::Zero(sp.values.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    if (sp.values(i) != 0.0) inv(i) = 1.0 / sp.values(i);
  Mat out = sp.vectors * inv.asDiagonal() * sp.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

Mat sym_pinv_sqrt(const Mat& s, double rel_tol) {
  const SymSpectrum sp = sym_spectrum(s, rel_tol);
  Vec w = Vec::Zero(sp.values.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (sp.values(i) > 0.0) w(i) = 1.0 / std::sqrt(sp.values(i));
  Mat out = sp.vectors * w.asDiagonal() * sp.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

Mat psd_factor(const Mat& s, double rel_tol) {
  const SymSpectrum sp = sym_spectrum(s, rel_tol);
  Mat out(s.rows(), sp.rank);
  Eigen::Index col = 0;
  // Descending eigenvalue order keeps the factor layout stable.
  for (Eigen::Index i = sp.values.size() - 1; i >= 0; --i) {
    if (sp.values(i) > 0.0) out.col(col++) = sp.vectors.col(i) * std::sqrt(sp.values(i));
  }
  return out.leftCols(col);
}

Mat null_basis(const Mat& s, double rel_tol) {
  const SymSpectrum sp = sym_spectrum(s, rel_tol);
  Mat out(s.rows(), s.rows() - sp.rank);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < sp.values.size(); ++i)
    if (sp.values(i) == 0.0) out.col(col++) = sp.vectors.col(i);
  return out.leftCols(col);
}

bool is_symmetric(const Mat& s, double rel_tol) {
  if (s.rows() != s.cols()) return false;
  const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace gks
