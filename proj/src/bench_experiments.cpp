#include "gks/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace gks {

namespace {

IpOptions ip_options(const ExperimentConfig& cfg) { return {cfg.ip_theta, cfg.ip_eps, cfg.ip_max_iters}; }

/// IP solve that falls back to the best iterate when the method stops short.
Vec solve_ip_or_best(const SmootherProblem& p, const IpOptions& opt, std::atomic<std::size_t>& failures) {
  try {
    return solve_ip(p, opt).x;
  } catch (const IpFailure& e) {
    ++failures;
    return e.best().x;
  }
}

Vec output_of(const Vec& x, std::size_t N) {
  Vec out(static_cast<Eigen::Index>(N));
  for (std::size_t t = 0; t < N; ++t) out(static_cast<Eigen::Index>(t)) = x(2 * static_cast<Eigen::Index>(t + 1) + 1);
  return out;
}

Vec output_of(const std::vector<Vec>& xs) {
  Vec out(static_cast<Eigen::Index>(xs.size() - 1));
  for (std::size_t t = 1; t < xs.size(); ++t) out(static_cast<Eigen::Index>(t - 1)) = xs[t](1);
  return out;
}

DcMotorSpec dc_spec(const ExperimentConfig& cfg, DcScenario scenario, double alpha) {
  DcMotorSpec s;
  s.scenario = scenario;
  s.N = cfg.N;
  s.alpha = alpha;
  s.sigma_e = cfg.sigma;
  s.sigma_d = cfg.sigma_d;
  s.outlier_factor = cfg.outlier_factor;
  return s;
}

}  // namespace

SmootherProblem lasso_problem(const DcInstance& inst, double gamma) {
  LtvModel md = inst.model;
  const Vec& b = dc_motor_b();
  // with Q = c·bbᵀ and √c = ‖b‖₁/‖b‖₂ the two rows of Wq·(d b) have |·| summing to |d|
  const double root_c = b.lpNorm<1>() / b.norm();
  md.Q_seq.assign(md.N, root_c * root_c * b * b.transpose());
  md.R_seq.assign(md.N, Mat::Constant(1, 1, 0.5));
  SmootherProblem p;
  p.sys = stack(md);
  p.V = Quadratic{};
  p.J = L1{};
  p.gamma = gamma;
  return p;
}

ImpulseResult run_impulsive_mc(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  cfg.resolve();
  const DcMotorSpec spec = dc_spec(cfg, DcScenario::Impulsive, cfg.alpha);
  const auto grid = log_grid(cfg.gamma_min, cfg.gamma_max, cfg.gamma_count);
  const IpOptions opt = ip_options(cfg);
  std::atomic<std::size_t> failures{0};
  const SmootherSolve solve = [&](const SmootherProblem& p) { return solve_ip_or_best(p, opt, failures); };

  ImpulseResult res;
  res.fits.columns = {"L2-opt", "LASSO-CV", "gamma"};
  res.fits.rows.assign(cfg.runs, {});
  parallel_for(cfg.runs, cfg.threads, [&](std::size_t i) {
    const std::uint64_t run_seed = stream_seed(cfg.seed, i);
    DcInstance inst;
    // a run without any impulse has no defined fit, so it is redrawn
    for (std::uint64_t attempt = 0;; ++attempt) {
      inst = simulate_dc_motor(spec, stream_seed(run_seed, attempt));
      if (inst.d.norm() > 0.0) break;
    }
    const double l2 = fit_metric(disturbance_readout(kalman_smooth(inst.model)), inst.d);
    const CvResult cv = cross_validate_gamma(lasso_problem(inst, 1.0), grid, cfg.folds, run_seed, solve);
    const Vec x = solve(lasso_problem(inst, cv.gamma));
    const double lasso = fit_metric(disturbance_readout(unflatten(x, 2)), inst.d);
    res.fits.rows[i] = {l2, lasso, cv.gamma};
  });
  res.ip_failures = failures;
  return res;
}

SmootherProblem l1_nominal_problem(const DcInstance& inst) {
  SmootherProblem p;
  p.sys = stack(inst.model);
  p.V = L1{};
  p.J = Quadratic{};
  // γ·½(d/σ_d)² with γ = 2 is the plain (d/σ_d)² penalty
  p.gamma = 2.0;
  return p;
}

OutlierResult run_outlier_mc(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  cfg.resolve();
  const IpOptions opt = ip_options(cfg);
  std::atomic<std::size_t> failures{0};
  OutlierResult res;

  const auto run_table = [&](double alpha, std::uint64_t stream, FitTable& table) {
    const DcMotorSpec spec = dc_spec(cfg, DcScenario::Outliers, alpha);
    const double r_opt = mixture_variance(alpha, cfg.sigma, cfg.outlier_factor);
    table.columns = {"L2-nom", "L2-opt", "L1-nom"};
    table.rows.assign(cfg.runs, {});
    parallel_for(cfg.runs, cfg.threads, [&](std::size_t i) {
      const DcInstance inst = simulate_dc_motor(spec, stream_seed(stream_seed(cfg.seed, stream), i));
      const double nom = fit_metric(output_of(kalman_smooth(inst.model)), inst.output);
      LtvModel opt_model = inst.model;
      opt_model.R_seq.assign(cfg.N, Mat::Constant(1, 1, r_opt));
      const double best = fit_metric(output_of(kalman_smooth(opt_model)), inst.output);
      const double l1 = fit_metric(output_of(solve_ip_or_best(l1_nominal_problem(inst), opt, failures), cfg.N),
                                   inst.output);
      table.rows[i] = {nom, best, l1};
    });
  };
  run_table(cfg.alpha, 0, res.contaminated);
  run_table(0.0, 1, res.control);
  res.ip_failures = failures;
  return res;
}

SmootherProblem rates_problem(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  cfg.resolve();
  SplineSpec spec;
  spec.signal = SplineSignal::Sine;
  spec.dt = cfg.dt;
  spec.N = cfg.N;
  spec.sigma = cfg.sigma;
  spec.outlier_alpha = cfg.outlier_alpha;
  spec.outlier_sigma = cfg.outlier_sigma;
  const SplineInstance inst = simulate_spline(spec, cfg.seed);
  SmootherProblem p;
  p.sys = stack(inst.model);
  p.V = L1{};
  p.J = Quadratic{};
  p.gamma = cfg.gamma;
  const auto dim = static_cast<Eigen::Index>(2 * (cfg.N + 1));
  p.constraints = Box{Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0)};
  return p;
}

RatesResult run_rates(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  cfg.resolve();
  const SmootherProblem p = rates_problem(cfg);
  RatesResult res;
  std::vector<std::pair<std::string, std::vector<IterationRecord>>> runs;

  SubgradientOptions so;
  so.max_iters = cfg.subgrad_iters;
  so.rule = StepRule::Harmonic;
  so.c = 1.0;
  runs.emplace_back("subgradient", solve_subgradient(p, so).records);

  for (const auto& [name, variant] : {std::pair{"cp-v1", CpVariant::V1}, std::pair{"cp-v2", CpVariant::V2}}) {
    CpOptions co;
    co.max_iters = cfg.cp_iters;
    co.eps = 0.0;
    co.tau = cfg.cp_tau;
    co.sigma = cfg.cp_sigma;
    if (co.tau == 0.0 && co.sigma == 0.0) {
      const double L = cp_operator_norm(p, variant);
      co.tau = cfg.cp_tau_scale / L;
      co.sigma = 0.99 / (cfg.cp_tau_scale * L);
    }
    runs.emplace_back(name, solve_cp(p, variant, co).records);
  }

  IpOptions io = ip_options(cfg);
  io.eps = std::min(io.eps, 1e-12);
  double f_star = kInf;
  try {
    runs.emplace_back("ip", solve_ip(p, io).report.records);
  } catch (const IpFailure& e) {
    runs.emplace_back("ip", e.report().records);
    f_star = objective(p, e.best().x);
  }
  for (const auto& [name, records] : runs)
    for (const auto& r : records) f_star = std::min(f_star, r.objective);
  res.f_star = f_star;

  for (const auto& [name, records] : runs)
    for (const auto& r : records) res.rows.push_back({name, r.iteration, r.objective, r.objective - f_star, r.wall_time});
  std::stable_sort(res.rows.begin(), res.rows.end(), [](const RateRow& a, const RateRow& b) {
    return a.solver != b.solver ? a.solver < b.solver : a.iteration < b.iteration;
  });
  return res;
}

int iterations_to_gap(const RatesResult& r, const std::string& solver, double tol) {
  for (const auto& row : r.rows)
    if (row.solver == solver && row.gap <= tol) return row.iteration;
  return -1;
}

double gap_at(const RatesResult& r, const std::string& solver, int iteration) {
  double gap = kInf;
  for (const auto& row : r.rows) {
    if (row.solver != solver || row.iteration > iteration) continue;
    gap = row.gap;
  }
  if (gap == kInf) throw Error(ErrorCode::InvalidArgument, "no records for solver " + solver);
  return gap;
}

ConstrainedResult run_constrained(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  cfg.resolve();
  SplineSpec spec;
  spec.signal = SplineSignal::ExpSin;
  spec.dt = cfg.dt;
  spec.N = cfg.N;
  spec.sigma = cfg.sigma;
  spec.outlier_alpha = cfg.outlier_alpha;
  spec.outlier_sigma = cfg.outlier_sigma;
  const SplineInstance inst = simulate_spline(spec, cfg.seed);

  ConstrainedResult res;
  res.lo = std::exp(-1.0);
  res.hi = std::exp(1.0);
  const auto dim = static_cast<Eigen::Index>(2 * (cfg.N + 1));
  Box box{Vec::Constant(dim, -kInf), Vec::Constant(dim, kInf)};
  for (Eigen::Index k = 1; k < dim; k += 2) {
    box.lo(k) = res.lo;
    box.hi(k) = res.hi;
  }

  SmootherProblem base;
  base.sys = stack(inst.model);
  base.gamma = cfg.gamma;
  const IpOptions opt = ip_options(cfg);
  const auto smooth = [&](const std::string& name, ScalarLoss loss, bool constrained) {
    SmootherProblem p = base;
    p.V = loss;
    p.J = loss;
    if (constrained) p.constraints = box;
    const Vec x = solve_ip(p, opt).x;
    std::vector<double> pos;
    double sq = 0.0;
    for (std::size_t k = 0; k <= cfg.N; ++k) {
      pos.push_back(x(2 * static_cast<Eigen::Index>(k) + 1));
      sq += std::pow(pos.back() - inst.x[k](1), 2);
    }
    res.rmse[name] = std::sqrt(sq / static_cast<double>(cfg.N + 1));
    res.estimates[name] = std::move(pos);
  };
  smooth("L2", Quadratic{}, false);
  smooth("cL2", Quadratic{}, true);
  smooth("Huber", Huber{cfg.huber_kappa}, false);
  smooth("cHuber", Huber{cfg.huber_kappa}, true);

  for (std::size_t k = 0; k <= cfg.N; ++k) {
    res.t.push_back(cfg.dt * static_cast<double>(k));
    res.truth.push_back(inst.x[k](1));
  }
  return res;
}

CsvTable rates_csv(const RatesResult& r) {
  CsvTable t;
  t.header = {"solver", "iteration", "objective", "gap", "seconds"};
  for (const auto& row : r.rows)
    t.rows.push_back({row.solver, std::to_string(row.iteration), format_double(row.objective),
                      format_double(row.gap), format_double(row.seconds)});
  return t;
}

CsvTable constrained_csv(const ConstrainedResult& r) {
  static const std::vector<std::string> names{"L2", "cL2", "Huber", "cHuber"};
  CsvTable t;
  t.header = {"t", "truth"};
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    std::vector<std::string> row{format_double(r.t[k]), format_double(r.truth[k])};
    for (const auto& n : names) row.push_back(format_double(r.estimates.at(n)[k]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace gks
