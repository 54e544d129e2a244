#include "gks/saddle.hpp"

namespace gks {

SaddleFactorization::SaddleFactorization(const BlockTridiag& T, const std::vector<LocalRow>& rows, double rank_tol)
    : n_(T.n), N_(T.N), row_count_(rows.size()), block_rows_(T.N + 1) {
  const auto n = static_cast<Eigen::Index>(n_);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].block > N_ || rows[j].cur.size() != n || (rows[j].prev.size() != 0 && rows[j].prev.size() != n) ||
        (rows[j].block == 0 && rows[j].prev.size() != 0))
      throw Error(ErrorCode::DimensionMismatch, "equality row does not fit the block layout", j);
    block_rows_[rows[j].block].push_back(j);
  }

  sub_.resize(N_ + 1);
  pivots_.reserve(N_ + 1);
  for (std::size_t k = 0; k <= N_; ++k) {
    const auto c = static_cast<Eigen::Index>(block_rows_[k].size());
    Mat D = Mat::Zero(n + c, n + c);
    D.topLeftCorner(n, n) = T.F_seq[k];
    for (Eigen::Index i = 0; i < c; ++i) {
      const LocalRow& row = rows[block_rows_[k][i]];
      D.block(0, n + i, n, 1) = row.cur;
      D.block(n + i, 0, 1, n) = row.cur.transpose();
    }
    if (k > 0) {
      const auto cp = static_cast<Eigen::Index>(block_rows_[k - 1].size());
      Mat S = Mat::Zero(n + c, n + cp);
      S.topLeftCorner(n, n) = T.G_seq[k - 1];
      for (Eigen::Index i = 0; i < c; ++i) {
        const LocalRow& row = rows[block_rows_[k][i]];
        if (row.prev.size()) S.block(n + i, 0, 1, n) = row.prev.transpose();
      }
      D -= S * pivots_.back().solve(S.transpose());
      sub_[k] = std::move(S);
    }
    Eigen::FullPivLU<Mat> lu(D);
    lu.setThreshold(rank_tol);
    if (!D.allFinite() || !lu.isInvertible()) throw Error(ErrorCode::SingularKkt, "saddle-point pivot block is singular", k);
    pivots_.push_back(std::move(lu));
  }
}

Vec SaddleFactorization::solve(const Vec& r, const Vec& e, Vec* lambda) const {
  const auto n = static_cast<Eigen::Index>(n_);
  if (r.size() != n * static_cast<Eigen::Index>(N_ + 1) || e.size() != static_cast<Eigen::Index>(row_count_))
    throw Error(ErrorCode::DimensionMismatch, "saddle right-hand side has the wrong size");
  std::vector<Vec> s(N_ + 1);
  for (std::size_t k = 0; k <= N_; ++k) {
    const auto c = static_cast<Eigen::Index>(block_rows_[k].size());
    Vec b(n + c);
    b.head(n) = r.segment(n * k, n);
    for (Eigen::Index i = 0; i < c; ++i) b(n + i) = e(block_rows_[k][i]);
    if (k > 0) b -= sub_[k] * pivots_[k - 1].solve(s[k - 1]);
    s[k] = std::move(b);
  }
  std::vector<Vec> z(N_ + 1);
  z[N_] = pivots_[N_].solve(s[N_]);
  for (std::size_t k = N_; k-- > 0;) z[k] = pivots_[k].solve(s[k] - sub_[k + 1].transpose() * z[k + 1]);

  Vec x(r.size());
  if (lambda) lambda->resize(row_count_);
  for (std::size_t k = 0; k <= N_; ++k) {
    x.segment(n * k, n) = z[k].head(n);
    if (lambda)
      for (std::size_t i = 0; i < block_rows_[k].size(); ++i) (*lambda)(block_rows_[k][i]) = z[k](n + i);
  }
  return x;
}

}  // namespace gks
