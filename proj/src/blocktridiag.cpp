#include "gks/blocktridiag.hpp"

#include "gks/linalg.hpp"
#include "gks/rng.hpp"

#include <cmath>
#include <future>

namespace gks {

BlockTridiag BlockTridiag::identity(std::size_t n, std::size_t N) {
  BlockTridiag T;
  T.n = n;
  T.N = N;
  T.F_seq.assign(N + 1, Mat::Identity(n, n));
  T.G_seq.assign(N, Mat::Zero(n, n));
  return T;
}

namespace {

void require_invertible(const Mat& cov, std::size_t block, const char* what) {
  if (sym_spectrum(cov).rank < cov.rows())
    throw Error(ErrorCode::SingularBlock, std::string(what) + " block is singular", block);
}

void check_dims(const BlockTridiag& T, const Vec& r) {
  if (static_cast<std::size_t>(r.size()) != T.dim() || T.F_seq.size() != T.N + 1 || T.G_seq.size() != T.N)
    throw Error(ErrorCode::DimensionMismatch, "block-tridiagonal operator and vector sizes differ");
}

// Cholesky of a pivot block with the PD tolerance λ_min > tol·‖F_t‖.
Eigen::LLT<Mat> pivot_llt(const Mat& d, const Mat& F, std::size_t t, double tol = kPdTol) {
  const Mat sym = 0.5 * (d + d.transpose());
  Eigen::LLT<Mat> llt(sym);
  bool ok = llt.info() == Eigen::Success;
  if (ok && tol > 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    ok = es.eigenvalues().minCoeff() > tol * F.norm();
  }
  if (!ok) throw Error(ErrorCode::NotPositiveDefinite, "pivot block is not positive definite", t);
  return llt;
}

struct Sweep {
  std::vector<Mat> d;
  std::vector<Vec> s;
};

Sweep forward_sweep(const BlockTridiag& T, const Vec& r, std::vector<Eigen::LLT<Mat>>* pivots = nullptr,
                    double tol = kPdTol) {
  const std::size_t n = T.n, N = T.N;
  Sweep sw;
  sw.d.resize(N + 1);
  sw.s.resize(N + 1);
  sw.d[0] = T.F_seq[0];
  sw.s[0] = r.head(n);
  Eigen::LLT<Mat> prev = pivot_llt(sw.d[0], T.F_seq[0], 0, tol);
  if (pivots) pivots->push_back(prev);
  for (std::size_t t = 1; t <= N; ++t) {
    const Mat& G = T.G_seq[t - 1];
    const Mat DinvGt = prev.solve(G.transpose());
    sw.d[t] = T.F_seq[t] - G * DinvGt;
    sw.s[t] = r.segment(n * t, n) - DinvGt.transpose() * sw.s[t - 1];
    prev = pivot_llt(sw.d[t], T.F_seq[t], t, tol);
    if (pivots) pivots->push_back(prev);
  }
  return sw;
}

Sweep backward_sweep(const BlockTridiag& T, const Vec& r) {
  const std::size_t n = T.n, N = T.N;
  Sweep sw;
  sw.d.resize(N + 1);
  sw.s.resize(N + 1);
  sw.d[N] = T.F_seq[N];
  sw.s[N] = r.segment(n * N, n);
  Eigen::LLT<Mat> next = pivot_llt(sw.d[N], T.F_seq[N], N);
  for (std::size_t t = N; t-- > 0;) {
    const Mat& G = T.G_seq[t];
    const Mat DinvG = next.solve(G);
    sw.d[t] = T.F_seq[t] - G.transpose() * DinvG;
    sw.s[t] = r.segment(n * t, n) - DinvG.transpose() * sw.s[t + 1];
    next = pivot_llt(sw.d[t], T.F_seq[t], t);
  }
  return sw;
}

}  // namespace

NormalEquations assemble_normal_equations(const StackedSystem& sys) {
  for (std::size_t k = 0; k <= sys.N; ++k) require_invertible(sys.Q_blocks[k], k, "Q");
  for (std::size_t k = 0; k < sys.N; ++k)
    if (sys.Wr[k].cwiseAbs().maxCoeff() > 0.0) require_invertible(sys.R_blocks[k], k, "R");
  NormalEquations ne;
  ne.T = assemble_weighted(sys, 1.0, 1.0, 0.0);
  ne.r = apply_Ct(sys, apply_Wr(sys, apply_Wr(sys, sys.y))) + apply_At(sys, apply_Wq(sys, apply_Wq(sys, sys.z)));
  return ne;
}

BlockTridiag assemble_weighted(const StackedSystem& sys, double a, double b, double c) {
  const std::size_t n = sys.n, N = sys.N;
  BlockTridiag T;
  T.n = n;
  T.N = N;
  T.F_seq.resize(N + 1);
  T.G_seq.resize(N);
  std::vector<Mat> Qinv(N + 1);
  for (std::size_t k = 0; k <= N; ++k) Qinv[k] = sys.Wq[k] * sys.Wq[k];
  for (std::size_t t = 0; t <= N; ++t) {
    Mat F = b * Qinv[t] + c * Mat::Identity(n, n);
    if (t < N) {
      const Mat& A = sys.A_blocks[t];
      F += b * A.transpose() * Qinv[t + 1] * A;
      T.G_seq[t] = -b * Qinv[t + 1] * A;
    }
    if (t >= 1) {
      const Mat& C = sys.C_blocks[t - 1];
      const Mat Rw = sys.Wr[t - 1] * sys.Wr[t - 1];
      F += a * C.transpose() * Rw * C;
    }
    T.F_seq[t] = 0.5 * (F + F.transpose());
  }
  return T;
}

Vec matvec(const BlockTridiag& T, const Vec& x) {
  check_dims(T, x);
  const std::size_t n = T.n;
  Vec out(x.size());
  for (std::size_t t = 0; t <= T.N; ++t) out.segment(n * t, n).noalias() = T.F_seq[t] * x.segment(n * t, n);
  for (std::size_t t = 0; t < T.N; ++t) {
    out.segment(n * (t + 1), n).noalias() += T.G_seq[t] * x.segment(n * t, n);
    out.segment(n * t, n).noalias() += T.G_seq[t].transpose() * x.segment(n * (t + 1), n);
  }
  return out;
}

Vec solve_rts(const BlockTridiag& T, const Vec& r) {
  return solve_factored(factor(T), r);
}

BtdFactorization factor(const BlockTridiag& T, double pd_tol) {
  BtdFactorization f;
  f.n = T.n;
  f.N = T.N;
  f.G_seq = T.G_seq;
  f.pivots.reserve(T.N + 1);
  check_dims(T, Vec::Zero(T.dim()));
  forward_sweep(T, Vec::Zero(T.dim()), &f.pivots, pd_tol);
  return f;
}

Vec solve_factored(const BtdFactorization& f, const Vec& r) {
  const std::size_t n = f.n, N = f.N;
  if (static_cast<std::size_t>(r.size()) != n * (N + 1))
    throw Error(ErrorCode::DimensionMismatch, "right-hand side size does not match factorization");
  std::vector<Vec> s(N + 1);
  s[0] = r.head(n);
  for (std::size_t t = 1; t <= N; ++t)
    s[t] = r.segment(n * t, n) - f.G_seq[t - 1] * f.pivots[t - 1].solve(s[t - 1]);
  Vec x(r.size());
  x.segment(n * N, n) = f.pivots[N].solve(s[N]);
  for (std::size_t t = N; t-- > 0;)
    x.segment(n * t, n) = f.pivots[t].solve(s[t] - f.G_seq[t].transpose() * x.segment(n * (t + 1), n));
  return x;
}

Vec solve_mf(const BlockTridiag& T, const Vec& r, bool parallel) {
  check_dims(T, r);
  const std::size_t n = T.n, N = T.N;
  Sweep fw, bw;
  if (parallel) {
    auto fut = std::async(std::launch::async, [&] { return backward_sweep(T, r); });
    fw = forward_sweep(T, r);
    bw = fut.get();
  } else {
    fw = forward_sweep(T, r);
    bw = backward_sweep(T, r);
  }
  Vec x(r.size());
  for (std::size_t t = 0; t <= N; ++t) {
    const Mat D = fw.d[t] + bw.d[t] - T.F_seq[t];
    const Vec s = fw.s[t] + bw.s[t] - r.segment(n * t, n);
    x.segment(n * t, n) = pivot_llt(D, T.F_seq[t], t).solve(s);
  }
  return x;
}

PowerIterationResult power_iteration(const LinearOperator& op, std::size_t dim, int iters, double tol) {
  PowerIterationResult res;
  if (dim == 0) {
    res.converged = true;
    return res;
  }
  Rng rng(0x5EEDULL);
  Vec v(dim);
  for (std::size_t i = 0; i < dim; ++i) v(i) = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int k = 1; k <= iters; ++k) {
    const Vec w = op(v);
    const double next = v.dot(w);
    res.iterations = k;
    const double wn = w.norm();
    if (wn == 0.0) {
      lambda = 0.0;
      res.converged = true;
      break;
    }
    if (k > 1 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      res.converged = true;
      break;
    }
    lambda = next;
    v = w / wn;
  }
  res.estimate = lambda;
  res.upper_bound = 1.05 * lambda;
  return res;
}

}  // namespace gks
