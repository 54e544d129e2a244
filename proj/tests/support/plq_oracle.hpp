// Independent numeric oracles for PLQ values, prox and conjugates.
#pragma once

#include "gks/plq.hpp"

#include <cmath>
#include <functional>

namespace gks::testing {

/// sup_{v : Hᵀv ≤ h} ⟨v, q⟩ − ½vᵀMv by enumerating active sets (small ℓ only).
/// Each candidate solves the equality-constrained KKT system; the best
/// feasible candidate is the supremum when it is attained.
inline double plq_sup(const PlqPenalty& p, const Vec& x) {
  const Vec q = p.b + p.B * x;
  const Eigen::Index k = p.b.size(), ell = p.h.size();
  double best = -kInf;
  for (std::uint32_t mask = 0; mask < (1u << ell); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < ell; ++j)
      if (mask & (1u << j)) act.push_back(j);
    const Eigen::Index a = static_cast<Eigen::Index>(act.size());
    Mat K = Mat::Zero(k + a, k + a);
    Vec rhs(k + a);
    K.topLeftCorner(k, k) = p.M;
    rhs.head(k) = q;
    for (Eigen::Index i = 0; i < a; ++i) {
      K.block(0, k + i, k, 1) = p.H.col(act[i]);
      K.block(k + i, 0, 1, k) = p.H.col(act[i]).transpose();
      rhs(k + i) = p.h(act[i]);
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
    const Vec sol = cod.solve(rhs);
    if ((K * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
    const Vec v = sol.head(k);
    if (ell > 0 && (p.H.transpose() * v - p.h).maxCoeff() > 1e-9) continue;
    best = std::max(best, v.dot(q) - 0.5 * v.dot(p.M * v));
  }
  return best;
}

/// Golden-section minimization of a convex 1-D function on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double prox_oracle(const ScalarLoss& loss, double eta, double y) {
  const double r = std::abs(y) + 10.0;
  return golden_min([&](double u) { return eta * eval(loss, u) + 0.5 * (u - y) * (u - y); }, -r, r);
}

/// sup_{x ∈ grid} x·w − f(x) on [−L, L]; a grid plus golden refinement.
inline double conjugate_oracle(const ScalarLoss& loss, double w, double L = 10.0) {
  auto neg = [&](double x) { return -(x * w - eval(loss, x)); };
  const int n = 4001;
  double bx = -L, bv = neg(-L);
  for (int i = 1; i < n; ++i) {
    const double x = -L + 2.0 * L * i / (n - 1);
    const double v = neg(x);
    if (v < bv) {
      bv = v;
      bx = x;
    }
  }
  const double step = 2.0 * L / (n - 1);
  const double xr = golden_min(neg, std::max(-L, bx - step), std::min(L, bx + step));
  return -std::min(bv, neg(xr));
}

}  // namespace gks::testing
