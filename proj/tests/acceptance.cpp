// One pass/fail line per acceptance criterion. Exit status is nonzero if any fails.
#include "gks/bench.hpp"
#include "gks/blocktridiag.hpp"
#include "gks/firstorder.hpp"
#include "gks/interior.hpp"
#include "gks/plq.hpp"
#include "support/dense.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace gks;
using namespace gks::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  if (!out.pass) ++failures;
  std::printf("criterion %d %s: %s (%s; %.1f s)\n", id, name, out.pass ? "PASS" : "FAIL", out.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

template <class... Args>
std::string fmt(Args&&... args) {
  std::ostringstream os;
  os.precision(4);
  (os << ... << args);
  return os.str();
}

SmootherProblem random_problem(std::uint64_t seed, std::size_t N) {
  Rng rng(seed);
  SmootherProblem p;
  p.sys = stack(random_model(rng, 2, 1, 1, N));
  return p;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(3), N = 1 + rng.below(50);
    const StackedSystem sys = stack(random_model(rng, n, m, 1, N));
    const Vec dense = dense_equality_ls(sys).x;
    const NormalEquations ne = assemble_normal_equations(sys);
    worst = std::max({worst, rel(solve_rts(ne.T, ne.r), dense), rel(solve_mf(ne.T, ne.r), dense)});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 1.0, fmt("max relative error ", worst)};
}

Outcome cross_solver_agreement() {
  ExperimentConfig cfg;
  cfg.experiment = "rates";
  cfg.resolve();
  const SmootherProblem p = rates_problem(cfg);

  const IpResult ip = solve_ip(p, {0.1, 1e-10, 200});
  AdmmOptions ao;
  ao.eps = 1e-10;
  ao.max_iters = 200000;
  const SolverReport ad = solve_admm_split(p, ao);
  CpOptions co;
  const double L = cp_operator_norm(p, CpVariant::V2);
  co.tau = cfg.cp_tau_scale / L;
  co.sigma = 0.99 / (cfg.cp_tau_scale * L);
  co.eps = 0.0;
  co.max_iters = 5000;
  const SolverReport cp = solve_cp(p, CpVariant::V2, co);

  const double f_ip = objective(p, ip.x);
  const double f_ad = objective(p, project(p.constraints, ad.x));
  const double f_cp = objective(p, project(p.constraints, cp.x));
  const double spread = std::max({f_ip, f_ad, f_cp}) - std::min({f_ip, f_ad, f_cp});
  const double relspread = spread / std::abs(f_ip);
  return {relspread <= 1e-6, fmt("ip ", f_ip, ", admm ", f_ad, ", cp-v2 ", f_cp, ", relative spread ", relspread)};
}

Outcome rate_reproduction() {
  ExperimentConfig cfg;
  cfg.experiment = "rates";
  cfg.resolve();
  const RatesResult r = run_rates(cfg);
  const int ip_iters = iterations_to_gap(r, "ip", 1e-8);
  const int cp_iters = iterations_to_gap(r, "cp-v2", 1e-9);
  const double v1 = gap_at(r, "cp-v1", 300), v2 = gap_at(r, "cp-v2", 300);
  const double sg = gap_at(r, "subgradient", 10000);
  const bool pass = ip_iters > 0 && ip_iters <= 40 && cp_iters > 0 && cp_iters <= 1000 && v1 >= 10 * v2 &&
                    sg >= 100 * v2;
  return {pass, fmt("ip to 1e-8: ", ip_iters, " its, cp-v2 to 1e-9: ", cp_iters, " its, gap@300 v1/v2 = ", v1 / v2,
                    ", subgradient@1e4 / cp-v2@300 = ", sg / v2)};
}

Outcome impulsive_mc() {
  ExperimentConfig cfg;
  cfg.experiment = "dc-impulse";
  cfg.resolve();
  const auto t0 = Clock::now();
  const ImpulseResult r = run_impulsive_mc(cfg);
  const double secs = seconds_since(t0);
  const double l2 = r.fits.summary("L2-opt").median, lasso = r.fits.summary("LASSO-CV").median;
  return {lasso > l2 && secs < 1200.0,
          fmt(cfg.runs, " runs: median LASSO-CV ", lasso, " vs L2-opt ", l2, ", ip stopped short ", r.ip_failures)};
}

Outcome outlier_mc() {
  ExperimentConfig cfg;
  cfg.experiment = "dc-outliers";
  cfg.resolve();
  const auto t0 = Clock::now();
  const OutlierResult r = run_outlier_mc(cfg);
  const double secs = seconds_since(t0);
  const double nom = r.contaminated.summary("L2-nom").median, opt = r.contaminated.summary("L2-opt").median,
               l1 = r.contaminated.summary("L1-nom").median;
  const double nom0 = r.control.summary("L2-nom").median, l10 = r.control.summary("L1-nom").median;
  const bool pass = l1 > nom && l1 > opt && std::abs(l10 - nom0) <= 5.0 && secs < 1200.0;
  return {pass, fmt(cfg.runs, " runs: alpha=", cfg.alpha, " medians L1-nom ", l1, ", L2-nom ", nom, ", L2-opt ", opt,
                    "; alpha=0 medians L1-nom ", l10, ", L2-nom ", nom0)};
}

Outcome constrained_demo() {
  ExperimentConfig cfg;
  cfg.experiment = "constrained";
  cfg.resolve();
  const auto t0 = Clock::now();
  const ConstrainedResult r = run_constrained(cfg);
  const double secs = seconds_since(t0);
  double lo = kInf, hi = -kInf;
  for (const auto* name : {"cL2", "cHuber"})
    for (double v : r.estimates.at(name)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const auto& e = r.rmse;
  const bool order = e.at("cHuber") <= e.at("Huber") && e.at("Huber") <= e.at("L2") && e.at("cL2") <= e.at("L2");
  const bool bounds = lo >= std::exp(-1.0) - 1e-8 && hi <= std::exp(1.0) + 1e-8;
  return {order && bounds && secs < 60.0,
          fmt("rmse L2 ", e.at("L2"), ", cL2 ", e.at("cL2"), ", Huber ", e.at("Huber"), ", cHuber ", e.at("cHuber"),
              "; constrained range [", lo, ", ", hi, "]")};
}

std::vector<ScalarLoss> all_losses() {
  return {Quadratic{},         L1{},           Huber{1.0},     Huber{0.3},    Vapnik{0.5},
          HuberInsensitive{1.0, 0.5}, ElasticNet{0.5}, ElasticNet{0.0}, ElasticNet{1.0}};
}

Outcome property_suites() {
  std::vector<std::string> broken;
  Rng rng(77);

  double moreau = 0.0, membership = 0.0;
  for (const auto& loss : all_losses())
    for (int i = 0; i < 1000; ++i) {
      const double y = 5.0 * rng.normal();
      const double eta = 0.05 + 3.0 * rng.uniform();
      const Vec yy = Vec::Constant(1, y);
      const double s = prox(loss, 1.0, yy)(0) + prox_conjugate(loss, 1.0, yy)(0);
      moreau = std::max(moreau, std::abs(s - y) / std::max(1.0, std::abs(y)));
      const double u = prox_scalar(loss, eta, y);
      const auto [lo, hi] = subdifferential(loss, u);
      const double g = (y - u) / eta;
      membership = std::max({membership, lo - g, g - hi});
    }
  if (moreau > 1e-12) broken.push_back(fmt("Moreau ", moreau));
  if (membership > 1e-8) broken.push_back(fmt("prox membership ", membership));

  double fd = 0.0;
  for (const ScalarLoss& V : {ScalarLoss{Quadratic{}}, ScalarLoss{Huber{0.7}}}) {
    SmootherProblem p = random_problem(5, 15);
    p.V = V;
    p.J = Huber{1.3};
    p.gamma = 0.6;
    const Vec x = random_vector(rng, p.sys.state_dim());
    const Vec g = grad_smooth(p, x);
    Vec num(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      xp(i) += 1e-6;
      xm(i) -= 1e-6;
      num(i) = (objective(p, xp) - objective(p, xm)) / 2e-6;
    }
    fd = std::max(fd, rel(g, num));
  }
  if (fd > 1e-6) broken.push_back(fmt("finite differences ", fd));

  SmootherProblem p = random_problem(16, 30);
  p.V = HuberInsensitive{0.6, 0.1};
  const auto dim = static_cast<Eigen::Index>(p.sys.state_dim());
  p.constraints = Box{Vec::Constant(dim, -0.5), Vec::Constant(dim, 0.5)};
  const ConstrainedPlqProblem prob = smoother_to_plq(p);
  const IpResult ip = solve_ip(prob);
  const double final_gap = duality_gap(prob, ip.x, ip.state.v, ip.state.omega, ip.state.lambda);
  double weakest = final_gap;
  for (int i = 0; i < 200; ++i) {
    const Vec x = project(p.constraints, random_vector(rng, dim));
    weakest = std::min(weakest, duality_gap(prob, x, ip.state.v, ip.state.omega, ip.state.lambda));
    weakest = std::min(weakest, duality_gap(prob, x, Vec::Zero(prob.k), Vec::Zero(prob.n1())));
  }
  if (weakest < -1e-10) broken.push_back(fmt("weak duality ", weakest));
  if (final_gap > 1e-6) broken.push_back(fmt("gap at ip termination ", final_gap));

  KktState st = initial_state(prob);
  bool positive = true;
  for (int it = 0; it < 30; ++it) {
    st = newton_step(prob, st, 0.1 * average_complementarity(st)).next;
    positive = positive && st.s.minCoeff() > 0 && st.r.minCoeff() > 0 && st.omega.minCoeff() > 0 &&
               st.w.minCoeff() > 0;
  }
  if (!positive) broken.push_back("ip positivity");

  SmootherProblem h = random_problem(9, 40);
  h.V = Huber{0.5};
  h.constraints = Box{Vec::Constant(static_cast<Eigen::Index>(h.sys.state_dim()), -0.3),
                      Vec::Constant(static_cast<Eigen::Index>(h.sys.state_dim()), 0.3)};
  ProxGradOptions po;
  po.eps = 1e-10;
  po.max_iters = 3000;
  const SolverReport pg = solve_prox_grad(h, po);
  double rise = 0.0;
  for (std::size_t i = 1; i < pg.records.size(); ++i)
    rise = std::max(rise, (pg.records[i].objective - pg.records[i - 1].objective) /
                              std::max(1.0, std::abs(pg.records[i - 1].objective)));
  if (rise > 1e-12) broken.push_back(fmt("prox-grad ascent ", rise));

  double stack_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const LtvModel md = random_model(rng, 1 + rng.below(3), 1 + rng.below(2), 1, 1 + rng.below(20));
    const StackedSystem sys = stack(md);
    const Vec x = random_vector(rng, sys.state_dim());
    const auto xs = unflatten(x, md.n);
    double direct = (xs[0] - md.mu).dot(md.Pi.ldlt().solve(xs[0] - md.mu));
    for (std::size_t t = 0; t < md.N; ++t) {
      const Vec w = xs[t + 1] - md.A_seq[t] * xs[t] - md.B_seq[t] * md.u_seq[t];
      const Vec e = md.y_seq[t] - md.C_seq[t] * xs[t + 1];
      direct += w.dot(md.Q_seq[t].ldlt().solve(w)) + e.dot(md.R_seq[t].ldlt().solve(e));
    }
    stack_err = std::max(stack_err, std::abs(least_squares_objective(sys, x) - direct) / std::max(1.0, direct));
  }
  if (stack_err > 1e-12) broken.push_back(fmt("stacked objective ", stack_err));

  std::string detail = broken.empty() ? "all properties hold" : "";
  for (const auto& b : broken) detail += (detail.empty() ? "" : ", ") + b;
  return {broken.empty(), detail};
}

template <class F>
double best_time(F&& f, int reps) {
  double best = kInf;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

Outcome complexity_scaling() {
  auto rts_time = [](std::size_t N) {
    Rng rng(31);
    const NormalEquations ne = assemble_normal_equations(stack(random_model(rng, 2, 1, 1, N)));
    volatile double sink = 0.0;
    return best_time(
               [&] {
                 for (int i = 0; i < 20; ++i) sink = sink + solve_rts(ne.T, ne.r)(0);
               },
               5) /
           20;
  };
  auto ip_time = [](std::size_t N) {
    SmootherProblem p = random_problem(20, N);
    p.V = L1{};
    const ConstrainedPlqProblem prob = smoother_to_plq(p);
    const KktState st = initial_state(prob);
    return best_time([&] { newton_step(prob, st, 0.1 * average_complementarity(st)); }, 5);
  };
  const double rts = rts_time(2000) / rts_time(200);
  const double ip = ip_time(2000) / ip_time(200);
  const bool pass = rts >= 5 && rts <= 20 && ip >= 5 && ip <= 20;
  return {pass, fmt("N=2000 / N=200 time ratio: rts ", rts, ", one ip iteration ", ip)};
}

}  // namespace

int main() {
  report(1, "oracle equivalence", oracle_equivalence);
  report(2, "cross-solver agreement", cross_solver_agreement);
  report(3, "rate reproduction", rate_reproduction);
  report(4, "impulsive Monte Carlo", impulsive_mc);
  report(5, "outlier Monte Carlo", outlier_mc);
  report(6, "constrained demo", constrained_demo);
  report(7, "property suites", property_suites);
  report(8, "complexity scaling", complexity_scaling);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
