#include <doctest.h>

#include "gks/firstorder.hpp"
#include "gks/saddle.hpp"
#include "support/dense.hpp"

#include <cmath>

using namespace gks;
using namespace gks::testing;

namespace {

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

SmootherProblem random_problem(std::uint64_t seed, std::size_t N = 15) {
  Rng rng(seed);
  SmootherProblem p;
  p.sys = stack(random_model(rng, 2, 1, 1, N));
  return p;
}

Vec rts_solution(const StackedSystem& sys) {
  const auto ne = assemble_normal_equations(sys);
  return solve_rts(ne.T, ne.r);
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

/// Motor-like model whose process covariance has rank one.
LtvModel rank_one_process_model(std::uint64_t seed, std::size_t N) {
  Rng rng(seed);
  LtvModel md = random_model(rng, 2, 1, 1, N);
  const Vec b = (Vec(2) << 1.0, 0.4).finished();
  for (auto& Q : md.Q_seq) Q = 0.3 * b * b.transpose();
  return md;
}

/// Checks the first-order optimality conditions of a box-constrained smooth problem.
double box_kkt_violation(const SmootherProblem& p, const Box& box, const Vec& x) {
  const Vec g = grad_smooth(p, x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double tol = 1e-7;
    if (x(i) <= box.lo(i) + tol)
      worst = std::max(worst, -g(i));
    else if (x(i) >= box.hi(i) - tol)
      worst = std::max(worst, g(i));
    else
      worst = std::max(worst, std::abs(g(i)));
  }
  return worst;
}

}  // namespace

TEST_CASE("quadratic objective is half the least-squares objective") {
  auto p = random_problem(3);
  Rng rng(4);
  const Vec x = random_vector(rng, p.sys.state_dim());
  CHECK(objective(p, x) == doctest::Approx(0.5 * least_squares_objective(p.sys, x)).epsilon(1e-12));
}

TEST_CASE("grad_smooth matches central differences") {
  auto p = random_problem(5);
  p.V = Huber{0.7};
  p.gamma = 0.6;
  Rng rng(6);
  const Vec x = random_vector(rng, p.sys.state_dim());
  const Vec g = grad_smooth(p, x);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    CHECK(g(i) == doctest::Approx((objective(p, xp) - objective(p, xm)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("objective_subgradient matches the gradient where the loss is differentiable") {
  auto p = random_problem(7);
  p.V = L1{};
  Rng rng(8);
  const Vec x = random_vector(rng, p.sys.state_dim());
  const Vec g = objective_subgradient(p, x);
  const double h = 1e-7;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    CHECK(g(i) == doctest::Approx((objective(p, xp) - objective(p, xm)) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("lipschitz bound on the scalar example") {
  SmootherProblem p;
  p.sys = stack(scalar_model(3.0));
  const double L = lipschitz_bound(p);
  CHECK(L >= 3.0);
  CHECK(L <= 1.05 * 3.0 + 1e-9);
}

TEST_CASE("fista momentum sequence") {
  CHECK(fista_next_s(1.0) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0));
  double s = 1.0;
  for (int k = 0; k < 50; ++k) {
    const double next = fista_next_s(s);
    CHECK(next > s);
    CHECK(next * next - next == doctest::Approx(s * s));
    s = next;
  }
}

TEST_CASE("proximal gradient and FISTA reproduce the Kalman smoother") {
  auto p = random_problem(11);
  const Vec xs = rts_solution(p.sys);
  ProxGradOptions opt;
  opt.eps = 1e-11;
  opt.max_iters = 500000;
  const auto pg = solve_prox_grad(p, opt);
  const auto fi = solve_fista(p, opt);
  CHECK(pg.reason == Termination::Converged);
  CHECK(fi.reason == Termination::Converged);
  CHECK(rel(pg.x, xs) < 1e-6);
  CHECK(rel(fi.x, xs) < 1e-6);
}

TEST_CASE("proximal gradient decreases the objective monotonically") {
  auto p = random_problem(12);
  p.V = Huber{0.5};
  Box box{Vec::Constant(p.sys.state_dim(), -0.5), Vec::Constant(p.sys.state_dim(), 0.5)};
  p.constraints = box;
  ProxGradOptions opt;
  opt.max_iters = 3000;
  const auto rep = solve_prox_grad(p, opt);
  for (std::size_t k = 1; k < rep.records.size(); ++k)
    CHECK(rep.records[k].objective <= rep.records[k - 1].objective + 1e-12);
}

TEST_CASE("FISTA needs fewer iterations than proximal gradient on a Huber problem") {
  auto p = random_problem(13, 40);
  p.V = Huber{0.3};
  ProxGradOptions opt;
  opt.eps = 1e-8;
  opt.max_iters = 200000;
  const auto pg = solve_prox_grad(p, opt);
  const auto fi = solve_fista(p, opt);
  REQUIRE(pg.reason == Termination::Converged);
  REQUIRE(fi.reason == Termination::Converged);
  CHECK(fi.iterations < pg.iterations);
  CHECK(std::abs(objective(p, fi.x) - objective(p, pg.x)) <= 1e-6 * std::abs(objective(p, pg.x)));
}

TEST_CASE("box-constrained solutions satisfy the optimality conditions") {
  auto p = random_problem(14);
  p.V = Huber{1.0};
  Box box{Vec::Constant(p.sys.state_dim(), -0.3), Vec::Constant(p.sys.state_dim(), 0.4)};
  p.constraints = box;
  ProxGradOptions pgo;
  pgo.eps = 1e-12;
  pgo.max_iters = 500000;
  const auto fi = solve_fista(p, pgo);
  CHECK(box_kkt_violation(p, box, fi.x) < 1e-8);

  AdmmOptions ao;
  ao.eps = 1e-10;
  const auto ad = solve_admm_split(p, ao);
  CHECK(ad.reason == Termination::Converged);
  CHECK(rel(ad.x, fi.x) < 1e-6);

  CpOptions co;
  co.eps = 1e-12;
  co.max_iters = 500000;
  const auto c1 = solve_cp(p, CpVariant::V1, co);
  const auto c2 = solve_cp(p, CpVariant::V2, co);
  CHECK(rel(c1.x, fi.x) < 1e-6);
  CHECK(rel(c2.x, fi.x) < 1e-6);
}

TEST_CASE("ADMM with quadratic losses reproduces the Kalman smoother") {
  auto p = random_problem(21);
  AdmmOptions opt;
  opt.eps = 1e-11;
  const auto rep = solve_admm_l1(p, opt);
  CHECK(rep.reason == Termination::Converged);
  CHECK(rel(rep.x, rts_solution(p.sys)) < 1e-7);
}

TEST_CASE("ADMM template with a trivial split") {
  // min ½‖x − a‖² + ½‖ω − b‖²  s.t.  x − ω = 0  →  x = ω = (a + b)/2
  const Vec a = (Vec(3) << 1.0, -2.0, 0.5).finished();
  const Vec b = (Vec(3) << 3.0, 0.0, -1.5).finished();
  const double tau = 0.8;
  AdmmTemplate tpl;
  tpl.x_dim = tpl.w_dim = 3;
  tpl.c = Vec::Zero(3);
  tpl.K1 = [](const Vec& x) { return x; };
  tpl.K2 = [](const Vec& w) { return Vec(-w); };
  tpl.K1tK2 = [](const Vec& w) { return Vec(-w); };
  tpl.x_update = [&](const Vec& w, const Vec& u) { return Vec((a + tau * (w - u / tau)) / (1 + tau)); };
  tpl.w_update = [&](const Vec& x, const Vec& u) { return Vec((b + tau * (x + u / tau)) / (1 + tau)); };
  AdmmOptions opt;
  opt.tau = tau;
  opt.eps = 1e-12;
  const auto rep = solve_admm_general(tpl, opt);
  CHECK(rep.reason == Termination::Converged);
  CHECK(rel(rep.x, Vec((a + b) / 2)) < 1e-10);
  CHECK(rel(rep.aux, Vec((a + b) / 2)) < 1e-10);
}

TEST_CASE("robust solvers agree on an l1 measurement loss") {
  auto p = random_problem(22);
  p.V = L1{};
  AdmmOptions ao;
  ao.eps = 1e-10;
  const auto ad = solve_admm_l1(p, ao);
  const auto sp = solve_admm_split(p, ao);
  CpOptions co;
  co.eps = 1e-11;
  co.max_iters = 1000000;
  const auto c1 = solve_cp(p, CpVariant::V1, co);
  const auto c2 = solve_cp(p, CpVariant::V2, co);
  const double f = objective(p, ad.x);
  CHECK(ad.reason == Termination::Converged);
  CHECK(objective(p, sp.x) == doctest::Approx(f).epsilon(1e-7));
  CHECK(objective(p, c1.x) == doctest::Approx(f).epsilon(1e-7));
  CHECK(objective(p, c2.x) == doctest::Approx(f).epsilon(1e-7));

  SubgradientOptions so;
  so.max_iters = 20000;
  so.c = 0.5;
  const auto sg = solve_subgradient(p, so);
  CHECK(sg.best_objective >= f - 1e-9);
  CHECK(sg.best_objective <= f * 1.05);
  CHECK(objective(p, sg.x) == doctest::Approx(sg.best_objective));
}

TEST_CASE("subgradient descent on the scalar quadratic example") {
  // f(x) = ½x₀² + ½(x₁ − x₀)² + ½(3 − x₁)²,  minimizer (1, 2), f* = 1.5
  SmootherProblem p;
  p.sys = stack(scalar_model(3.0));
  SubgradientOptions opt;
  opt.rule = StepRule::Constant;
  opt.c = 0.2;
  opt.max_iters = 500;
  const auto rep = solve_subgradient(p, opt);
  CHECK(rep.x(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.x(1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(rep.best_objective == doctest::Approx(1.5));
  CHECK(rep.records.size() == 500);
}

TEST_CASE("CP-V2 prox of g with identity dynamics halves its argument") {
  LtvModel md = scalar_model(0.0);
  md.A_seq = {Mat::Zero(1, 1)};
  SmootherProblem p;
  p.sys = stack(md);
  const Vec y = (Vec(2) << 4.0, -1.0).finished();
  const Vec out = cp_v2_prox_g(p, 1.0, y);
  CHECK(out(0) == doctest::Approx(2.0));
  CHECK(out(1) == doctest::Approx(-0.5));
}

TEST_CASE("Chambolle-Pock rejects steps with sigma*tau*L^2 >= 1") {
  auto p = random_problem(31);
  const double L = cp_operator_norm(p, CpVariant::V1);
  CpOptions opt;
  opt.sigma = opt.tau = 1.001 / L;
  CHECK_THROWS_AS(solve_cp(p, CpVariant::V1, opt), Error);
  try {
    solve_cp(p, CpVariant::V1, opt);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepSizeViolation);
  }
  opt.sigma = opt.tau = 0.99 / L;
  opt.max_iters = 5;
  CHECK_NOTHROW(solve_cp(p, CpVariant::V1, opt));
}

TEST_CASE("solvers reject unsupported inputs") {
  auto p = random_problem(32);
  p.V = L1{};
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code([&] { solve_prox_grad(p); }) == ErrorCode::NonSmoothLoss);
  p.gamma = 0.0;
  CHECK(code([&] { solve_admm_l1(p); }) == ErrorCode::InvalidArgument);
  p.gamma = 1.0;
  p.J = L1{};
  CHECK(code([&] { solve_cp(p, CpVariant::V2); }) == ErrorCode::InvalidArgument);

  SmootherProblem q;
  q.sys = stack(rank_one_process_model(33, 6));
  REQUIRE_FALSE(q.sys.equalities.empty());
  CHECK(code([&] { solve_cp(q, CpVariant::V1); }) == ErrorCode::UnsupportedConstraint);
  CHECK(code([&] { solve_fista(q); }) == ErrorCode::UnsupportedConstraint);
  CHECK(code([&] { solve_subgradient(q); }) == ErrorCode::UnsupportedConstraint);
}

TEST_CASE("saddle factorization matches a dense KKT solve") {
  Rng rng(41);
  const std::size_t n = 3, N = 5;
  const BlockTridiag T = random_spd_btd(rng, n, N);
  std::vector<LocalRow> rows;
  for (std::size_t k = 0; k <= N; k += 2) {
    LocalRow row;
    row.block = k;
    row.cur = random_vector(rng, n);
    if (k > 0) row.prev = random_vector(rng, n);
    row.rhs = rng.normal();
    rows.push_back(row);
  }
  rows.push_back({3, random_vector(rng, n), Vec(), 0.7});

  const auto dim = static_cast<Eigen::Index>(T.dim());
  const auto c = static_cast<Eigen::Index>(rows.size());
  Mat E = Mat::Zero(dim, c);
  Vec e(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    const auto& row = rows[j];
    const auto off = static_cast<Eigen::Index>(n * row.block);
    E.block(off, j, n, 1) = row.cur;
    if (row.prev.size()) E.block(off - n, j, n, 1) = row.prev;
    e(j) = row.rhs;
  }
  Mat K = Mat::Zero(dim + c, dim + c);
  K.topLeftCorner(dim, dim) = dense_btd(T);
  K.topRightCorner(dim, c) = E;
  K.bottomLeftCorner(c, dim) = E.transpose();
  const Vec r = random_vector(rng, dim);
  Vec rhs(dim + c);
  rhs << r, e;
  const Vec sol = K.fullPivLu().solve(rhs);

  SaddleFactorization f(T, rows);
  Vec lambda;
  const Vec x = f.solve(r, e, &lambda);
  CHECK(rel(x, Vec(sol.head(dim))) < 1e-10);
  CHECK(rel(lambda, Vec(sol.tail(c))) < 1e-10);
  CHECK((E.transpose() * x - e).norm() < 1e-10);
}

TEST_CASE("ADMM enforces the nullspace rows of a singular process covariance") {
  SmootherProblem p;
  p.sys = stack(rank_one_process_model(51, 8));
  const auto& sys = p.sys;
  REQUIRE_FALSE(sys.equalities.empty());

  const DenseEqualityLs dense = dense_equality_ls(sys);
  const Vec& oracle = dense.x;
  const Mat& E = dense.E;
  const Vec& e = dense.e;

  AdmmOptions opt;
  opt.eps = 1e-11;
  const auto rep = solve_admm_l1(p, opt);
  CHECK(rep.reason == Termination::Converged);
  CHECK(rel(rep.x, oracle) < 1e-7);
  CHECK((E.transpose() * rep.x - e).lpNorm<Eigen::Infinity>() < 1e-8);
}
