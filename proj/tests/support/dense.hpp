// Dense reference constructions used as test oracles only.
#pragma once

#include "gks/blocktridiag.hpp"
#include "gks/rng.hpp"
#include "gks/statespace.hpp"

namespace gks::testing {

inline Mat random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat out(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out(i, j) = rng.normal();
  return out;
}

inline Vec random_vector(Rng& rng, Eigen::Index n) {
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.normal();
  return out;
}

inline Mat random_spd(Rng& rng, Eigen::Index n, double floor = 0.5) {
  const Mat a = random_matrix(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + floor * Mat::Identity(n, n);
}

/// Random well-posed model with invertible covariances.
inline LtvModel random_model(Rng& rng, std::size_t n, std::size_t m, std::size_t p, std::size_t N) {
  LtvModel md;
  md.N = N;
  md.n = n;
  md.m = m;
  md.p = p;
  for (std::size_t t = 0; t < N; ++t) {
    md.A_seq.push_back(0.5 * random_matrix(rng, n, n));
    md.B_seq.push_back(random_matrix(rng, n, p));
    md.C_seq.push_back(random_matrix(rng, m, n));
    md.Q_seq.push_back(random_spd(rng, n));
    md.R_seq.push_back(random_spd(rng, m));
    md.u_seq.push_back(random_vector(rng, p));
    md.y_seq.push_back(random_vector(rng, m));
  }
  md.mu = random_vector(rng, n);
  md.Pi = random_spd(rng, n);
  return md;
}

inline Mat dense_A(const StackedSystem& s) {
  const auto n = static_cast<Eigen::Index>(s.n);
  Mat A = Mat::Identity(s.state_dim(), s.state_dim());
  for (std::size_t t = 0; t < s.N; ++t) A.block(n * (t + 1), n * t, n, n) = -s.A_blocks[t];
  return A;
}

inline Mat dense_C(const StackedSystem& s) {
  const auto n = static_cast<Eigen::Index>(s.n), m = static_cast<Eigen::Index>(s.m);
  Mat C = Mat::Zero(s.meas_dim(), s.state_dim());
  for (std::size_t k = 0; k < s.N; ++k) C.block(m * k, n * (k + 1), m, n) = s.C_blocks[k];
  return C;
}

inline Mat dense_block_diag(const std::vector<Mat>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  Mat out = Mat::Zero(total, total);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

struct DenseEqualityLs {
  Vec x;
  Mat E;  ///< equality rows as columns
  Vec e;
};

/// min ½‖Wr(y − Cx)‖² + ½‖Wq(z − Ax)‖² s.t. Eᵀx = e, by a dense KKT solve.
inline DenseEqualityLs dense_equality_ls(const StackedSystem& sys) {
  const Mat A = dense_A(sys), C = dense_C(sys);
  const Mat Wq = dense_block_diag(sys.Wq), Wr = dense_block_diag(sys.Wr);
  const auto dim = static_cast<Eigen::Index>(sys.state_dim());
  const auto c = static_cast<Eigen::Index>(sys.equalities.size());
  DenseEqualityLs out;
  out.E = Mat::Zero(dim, c);
  out.e.resize(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    const auto& row = sys.equalities[j];
    const auto off = static_cast<Eigen::Index>(sys.n * row.block);
    out.E.block(off, j, sys.n, 1) = row.cur;
    if (row.prev.size()) out.E.block(off - sys.n, j, sys.n, 1) = row.prev;
    out.e(j) = row.rhs;
  }
  Mat K = Mat::Zero(dim + c, dim + c);
  K.topLeftCorner(dim, dim) = C.transpose() * Wr * Wr * C + A.transpose() * Wq * Wq * A;
  K.topRightCorner(dim, c) = out.E;
  K.bottomLeftCorner(c, dim) = out.E.transpose();
  Vec rhs(dim + c);
  rhs << C.transpose() * Wr * Wr * sys.y + A.transpose() * Wq * Wq * sys.z, out.e;
  out.x = K.fullPivLu().solve(rhs).head(dim);
  return out;
}

inline Mat dense_btd(const BlockTridiag& T) {
  const auto n = static_cast<Eigen::Index>(T.n);
  Mat D = Mat::Zero(T.dim(), T.dim());
  for (std::size_t t = 0; t <= T.N; ++t) D.block(n * t, n * t, n, n) = T.F_seq[t];
  for (std::size_t t = 0; t < T.N; ++t) {
    D.block(n * (t + 1), n * t, n, n) = T.G_seq[t];
    D.block(n * t, n * (t + 1), n, n) = T.G_seq[t].transpose();
  }
  return D;
}

/// Random diagonally dominant SPD block-tridiagonal operator.
inline BlockTridiag random_spd_btd(Rng& rng, std::size_t n, std::size_t N) {
  BlockTridiag T;
  T.n = n;
  T.N = N;
  for (std::size_t t = 0; t < N; ++t) T.G_seq.push_back(random_matrix(rng, n, n));
  for (std::size_t t = 0; t <= N; ++t) {
    Mat F = random_spd(rng, n, 1.0);
    double extra = 0.0;
    if (t > 0) extra += T.G_seq[t - 1].norm();
    if (t < N) extra += T.G_seq[t].norm();
    F += extra * Mat::Identity(n, n);
    T.F_seq.push_back(F);
  }
  return T;
}

}  // namespace gks::testing
