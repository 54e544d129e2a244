#include <doctest.h>

#include "gks/blocktridiag.hpp"
#include "support/dense.hpp"

#include <cmath>

using namespace gks;
using namespace gks::testing;

namespace {

BlockTridiag scalar_example() {
  BlockTridiag T;
  T.n = 1;
  T.N = 1;
  T.F_seq = {Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 2.0)};
  T.G_seq = {Mat::Constant(1, 1, -1.0)};
  return T;
}

LtvModel scalar_model(double y1) {
  LtvModel md;
  md.N = 1;
  md.n = md.m = md.p = 1;
  md.A_seq = {Mat::Constant(1, 1, 1.0)};
  md.B_seq = {Mat::Constant(1, 1, 1.0)};
  md.C_seq = {Mat::Constant(1, 1, 1.0)};
  md.Q_seq = {Mat::Constant(1, 1, 1.0)};
  md.R_seq = {Mat::Constant(1, 1, 1.0)};
  md.u_seq = {Vec::Zero(1)};
  md.y_seq = {Vec::Constant(1, y1)};
  md.mu = Vec::Zero(1);
  md.Pi = Mat::Identity(1, 1);
  return md;
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("assemble_normal_equations on the scalar example") {
  const auto ne = assemble_normal_equations(stack(scalar_model(3.0)));
  CHECK(dense_btd(ne.T).isApprox((Mat(2, 2) << 2, -1, -1, 2).finished()));
  CHECK(ne.r(0) == 0.0);
  CHECK(ne.r(1) == doctest::Approx(3.0));
}

TEST_CASE("assemble_normal_equations matches the dense construction") {
  Rng rng(17);
  const auto md = random_model(rng, 3, 2, 1, 6);
  const auto s = stack(md);
  const auto ne = assemble_normal_equations(s);
  const Mat A = dense_A(s), C = dense_C(s);
  const Mat Qi = dense_block_diag(s.Q_blocks).inverse(), Ri = dense_block_diag(s.R_blocks).inverse();
  const Mat T = C.transpose() * Ri * C + A.transpose() * Qi * A;
  const Vec r = C.transpose() * Ri * s.y + A.transpose() * Qi * s.z;
  const Mat D = dense_btd(ne.T);
  CHECK((D - T).cwiseAbs().maxCoeff() <= 1e-12 * T.cwiseAbs().maxCoeff());
  CHECK((ne.r - r).norm() <= 1e-12 * r.norm());
  // Bandwidth is exactly one block.
  CHECK(D.topRightCorner(3, 3).isZero(0.0));
  CHECK(D.bottomLeftCorner(3, 3).isZero(0.0));
  for (const auto& F : ne.T.F_seq) CHECK((F - F.transpose()).norm() <= 1e-12 * F.norm());
}

TEST_CASE("assemble_normal_equations rejects singular blocks") {
  auto md = scalar_model(1.0);
  md.Q_seq[0] = Mat::Zero(1, 1);
  try {
    assemble_normal_equations(stack(md));
    FAIL("expected SingularBlock");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularBlock);
    CHECK(e.index() == std::optional<std::size_t>(1));
  }
}

TEST_CASE("solvers on small known systems") {
  const auto T = scalar_example();
  const Vec r = (Vec(2) << 0, 2).finished();
  const Vec expect = (Vec(2) << 2.0 / 3.0, 4.0 / 3.0).finished();
  CHECK(rel(solve_rts(T, r), expect) <= 1e-14);
  CHECK(rel(solve_mf(T, r), expect) <= 1e-14);
  CHECK(solve_mf(T, r)(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rel(solve_factored(factor(T), r), expect) <= 1e-14);

  const auto I = BlockTridiag::identity(3, 5);
  Rng rng(1);
  const Vec x = random_vector(rng, 18);
  CHECK(solve_rts(I, x) == x);
  CHECK(rel(solve_mf(I, x), x) <= 1e-15);
  CHECK(solve_factored(factor(I), x) == x);

  auto D2 = BlockTridiag::identity(2, 4);
  for (auto& F : D2.F_seq) F *= 2.0;
  const Vec ones = Vec::Ones(10);
  CHECK(rel(solve_mf(D2, ones), ones / 2) <= 1e-15);
}

TEST_CASE("random SPD systems: rts and mf agree with dense solves") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(4), N = 1 + rng.below(50);
    const auto T = random_spd_btd(rng, n, N);
    const Vec r = random_vector(rng, T.dim());
    const Vec dense = dense_btd(T).ldlt().solve(r);
    const Vec xr = solve_rts(T, r), xm = solve_mf(T, r, trial % 2 == 0);
    CHECK(rel(xr, dense) <= 1e-10);
    CHECK(rel(xm, dense) <= 1e-10);
    CHECK((matvec(T, xr) - r).norm() / r.norm() <= 1e-10);
    CHECK(rel(xm, xr) <= 1e-8);
  }
}

TEST_CASE("factor once, solve many") {
  Rng rng(4);
  const auto T = random_spd_btd(rng, 3, 20);
  const auto f = factor(T);
  for (int i = 0; i < 100; ++i) {
    const Vec r = random_vector(rng, T.dim());
    CHECK(rel(solve_factored(f, r), solve_rts(T, r)) <= 1e-12);
  }
}

TEST_CASE("matvec") {
  const auto T = scalar_example();
  CHECK(matvec(T, Vec::Ones(2)).isApprox(Vec::Ones(2)));
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto B = random_spd_btd(rng, 1 + rng.below(4), 1 + rng.below(10));
    const Vec x = random_vector(rng, B.dim());
    const Vec d = dense_btd(B) * x;
    CHECK((matvec(B, x) - d).norm() <= 1e-13 * d.norm());
  }
  CHECK_THROWS_AS(matvec(T, Vec::Ones(3)), Error);
}

TEST_CASE("non-PD pivots are reported with their block index") {
  auto T = BlockTridiag::identity(1, 3);
  T.F_seq[2] = Mat::Constant(1, 1, -1.0);
  try {
    solve_rts(T, Vec::Ones(4));
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
    CHECK(e.index() == std::optional<std::size_t>(2));
  }
  CHECK_THROWS_AS(solve_mf(T, Vec::Ones(4)), Error);
  CHECK_THROWS_AS(factor(T), Error);
}

TEST_CASE("power iteration") {
  const Mat D = (Vec(2) << 1, 3).finished().asDiagonal();
  auto r1 = power_iteration([&](const Vec& v) { return Vec(D * v); }, 2);
  CHECK(std::abs(r1.estimate - 3.0) <= 1e-6);
  CHECK(r1.converged);
  CHECK(r1.upper_bound == doctest::Approx(3.15));

  const auto T = scalar_example();
  auto r2 = power_iteration([&](const Vec& v) { return matvec(T, v); }, 2);
  CHECK(std::abs(r2.estimate - 3.0) <= 1e-6);
  CHECK(r2.estimate <= 3.0 * (1 + 1e-12));

  const Vec b = (Vec(3) << 1, 2, 2).finished();
  auto r3 = power_iteration([&](const Vec& v) { return Vec(b * b.dot(v)); }, 3);
  CHECK(r3.estimate == doctest::Approx(9.0).epsilon(1e-10));
}
