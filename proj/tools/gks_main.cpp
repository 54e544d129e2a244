#include "gks/bench.hpp"
#include "gks/firstorder.hpp"
#include "gks/interior.hpp"
#include "gks/model_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace gks;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct LossFlags {
  std::string name = "quadratic";
  double kappa = 1.0;
  double eps = 0.0;
  double alpha = 0.5;
};

ScalarLoss make_loss(const LossFlags& f) {
  if (f.name == "quadratic") return Quadratic{};
  if (f.name == "l1") return L1{};
  if (f.name == "huber") return Huber{f.kappa};
  if (f.name == "vapnik") return Vapnik{f.eps};
  if (f.name == "huber-insensitive") return HuberInsensitive{f.kappa, f.eps};
  if (f.name == "elastic-net") return ElasticNet{f.alpha};
  throw Error(ErrorCode::Config, "unknown loss '" + f.name + "'");
}

struct SmoothArgs {
  std::string model, solver = "ip", out;
  std::optional<double> eps, tau, sigma;
  std::optional<int> max_iters;
  double gamma = 1.0;
  double ip_theta = 0.1, ip_eps = 1e-8;
  int ip_max_iters = 200;
  LossFlags V, J;
  std::optional<double> box_lo, box_hi;
};

int run_smooth(const SmoothArgs& a) {
  const LtvModel model = load_model_json(a.model);
  SmootherProblem p;
  p.sys = stack(model);
  p.V = make_loss(a.V);
  p.J = make_loss(a.J);
  p.gamma = a.gamma;
  if (a.box_lo || a.box_hi) {
    const auto dim = static_cast<Eigen::Index>(p.sys.state_dim());
    p.constraints = Box{Vec::Constant(dim, a.box_lo.value_or(-kInf)), Vec::Constant(dim, a.box_hi.value_or(kInf))};
  }
  check_problem(p);

  SolverReport rep;
  if (a.solver == "subgrad") {
    SubgradientOptions o;
    if (a.max_iters) o.max_iters = *a.max_iters;
    rep = solve_subgradient(p, o);
  } else if (a.solver == "proxgrad" || a.solver == "fista") {
    ProxGradOptions o;
    if (a.eps) o.eps = *a.eps;
    if (a.max_iters) o.max_iters = *a.max_iters;
    rep = a.solver == "fista" ? solve_fista(p, o) : solve_prox_grad(p, o);
  } else if (a.solver == "admm") {
    AdmmOptions o;
    if (a.tau) o.tau = *a.tau;
    if (a.eps) o.eps = *a.eps;
    if (a.max_iters) o.max_iters = *a.max_iters;
    rep = std::holds_alternative<Unconstrained>(p.constraints) ? solve_admm_l1(p, o) : solve_admm_split(p, o);
  } else if (a.solver == "cp-v1" || a.solver == "cp-v2") {
    CpOptions o;
    if (a.tau) o.tau = *a.tau;
    if (a.sigma) o.sigma = *a.sigma;
    if (a.eps) o.eps = *a.eps;
    if (a.max_iters) o.max_iters = *a.max_iters;
    rep = solve_cp(p, a.solver == "cp-v1" ? CpVariant::V1 : CpVariant::V2, o);
  } else {
    rep = solve_ip(p, {a.ip_theta, a.ip_eps, a.ip_max_iters}).report;
  }

  const auto n = static_cast<Eigen::Index>(p.sys.n);
  CsvTable t;
  t.header.push_back("t");
  for (Eigen::Index i = 0; i < n; ++i) t.header.push_back("x" + std::to_string(i));
  for (std::size_t k = 0; k <= p.sys.N; ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(format_double(rep.x(n * static_cast<Eigen::Index>(k) + i)));
    t.rows.push_back(std::move(row));
  }
  if (a.out.empty()) std::cout << to_csv(t);
  else write_csv(a.out, t);

  std::cerr << "solver " << a.solver << ": " << to_string(rep.reason) << " after " << rep.iterations
            << " iterations, objective " << format_double(objective(p, rep.x)) << '\n';
  return 0;
}

struct BenchArgs {
  std::string experiment, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<unsigned> threads;
};

void print_fit(const std::string& label, const FitTable& t) {
  for (const auto& c : t.columns) {
    if (c == "gamma") continue;
    const FitSummary s = t.summary(c);
    std::cout << label << c << ": median " << s.median << " [q1 " << s.q1 << ", q3 " << s.q3 << "]\n";
  }
}

int run_bench(const BenchArgs& a) {
  ExperimentConfig cfg;
  if (!a.config.empty()) cfg = load_config_toml(a.config);
  if (!cfg.experiment.empty() && cfg.experiment != a.experiment)
    throw Error(ErrorCode::Config, "config is for experiment '" + cfg.experiment + "', not '" + a.experiment + "'");
  cfg.experiment = a.experiment;
  if (a.seed) cfg.seed = *a.seed;
  if (a.runs) cfg.runs = *a.runs;
  if (a.threads) cfg.threads = *a.threads;
  cfg.resolve();

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + a.out + ": " + ec.message());
  const std::string dir = a.out + "/";

  if (a.experiment == "rates") {
    const RatesResult r = run_rates(cfg);
    write_csv(dir + "rates.csv", rates_csv(r));
    std::cout << "f* = " << format_double(r.f_star) << '\n';
    std::cout << "ip iterations to gap 1e-8: " << iterations_to_gap(r, "ip", 1e-8) << '\n';
    std::cout << "cp-v2 iterations to gap 1e-9: " << iterations_to_gap(r, "cp-v2", 1e-9) << '\n';
    std::cout << "gap at 300: cp-v1 " << gap_at(r, "cp-v1", 300) << ", cp-v2 " << gap_at(r, "cp-v2", 300) << '\n';
    std::cout << "subgradient gap at " << cfg.subgrad_iters << ": " << gap_at(r, "subgradient", cfg.subgrad_iters)
              << '\n';
  } else if (a.experiment == "dc-impulse") {
    const ImpulseResult r = run_impulsive_mc(cfg);
    write_csv(dir + "dc-impulse.csv", fit_table_csv(r.fits));
    print_fit("", r.fits);
    if (r.ip_failures) std::cout << "ip solves that stopped short: " << r.ip_failures << '\n';
  } else if (a.experiment == "dc-outliers") {
    const OutlierResult r = run_outlier_mc(cfg);
    CsvTable t;
    t.header = {"run", "alpha", "L2-nom", "L2-opt", "L1-nom"};
    for (const auto& [alpha, table] : {std::pair{cfg.alpha, &r.contaminated}, std::pair{0.0, &r.control}})
      for (std::size_t i = 0; i < table->rows.size(); ++i) {
        std::vector<std::string> row{std::to_string(i), format_double(alpha)};
        for (double v : table->rows[i]) row.push_back(format_double(v));
        t.rows.push_back(std::move(row));
      }
    write_csv(dir + "dc-outliers.csv", t);
    print_fit("alpha=" + format_double(cfg.alpha) + " ", r.contaminated);
    print_fit("alpha=0 ", r.control);
    if (r.ip_failures) std::cout << "ip solves that stopped short: " << r.ip_failures << '\n';
  } else {
    const ConstrainedResult r = run_constrained(cfg);
    write_csv(dir + "constrained.csv", constrained_csv(r));
    for (const auto& [name, v] : r.rmse) std::cout << "rmse " << name << ": " << v << '\n';
  }

  std::ofstream resolved(dir + "config.resolved.toml");
  resolved << config_to_toml(cfg);
  if (!resolved) throw Error(ErrorCode::Io, "cannot write " + dir + "config.resolved.toml");
  return 0;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Config:
    case ErrorCode::Io:
    case ErrorCode::InvalidModel:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::SingularR:
    case ErrorCode::NonSmoothLoss:
    case ErrorCode::UnsupportedLoss:
    case ErrorCode::UnsupportedConstraint:
    case ErrorCode::StepSizeViolation:
      return kExitConfig;
    default:
      return kExitSolver;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Kalman smoothing: solvers and benchmarks"};
  app.require_subcommand(1);

  SmoothArgs sa;
  auto* smooth = app.add_subcommand("smooth", "Smooth one model and write the state trajectory as CSV");
  smooth->add_option("--model", sa.model, "Model JSON")->required()->check(CLI::ExistingFile);
  smooth->add_option("--solver", sa.solver, "Solver")
      ->check(CLI::IsMember({"subgrad", "proxgrad", "fista", "admm", "cp-v1", "cp-v2", "ip"}));
  smooth->add_option("--eps", sa.eps, "Stopping tolerance (first-order solvers)");
  smooth->add_option("--max-iters", sa.max_iters, "Iteration cap (first-order solvers)");
  smooth->add_option("--tau", sa.tau, "ADMM penalty or CP primal step");
  smooth->add_option("--sigma", sa.sigma, "CP dual step");
  smooth->add_option("--gamma", sa.gamma, "Weight on the process term");
  smooth->add_option("--ip-theta", sa.ip_theta, "Interior-point centering factor");
  smooth->add_option("--ip-eps", sa.ip_eps, "Interior-point tolerance");
  smooth->add_option("--ip-max-iters", sa.ip_max_iters, "Interior-point iteration cap");
  const auto losses = CLI::IsMember({"quadratic", "l1", "huber", "vapnik", "huber-insensitive", "elastic-net"});
  smooth->add_option("--V", sa.V.name, "Measurement loss")->check(losses);
  smooth->add_option("--J", sa.J.name, "Process loss")->check(losses);
  smooth->add_option("--V-kappa", sa.V.kappa, "Huber threshold for V");
  smooth->add_option("--J-kappa", sa.J.kappa, "Huber threshold for J");
  smooth->add_option("--V-eps", sa.V.eps, "Insensitivity width for V");
  smooth->add_option("--J-eps", sa.J.eps, "Insensitivity width for J");
  smooth->add_option("--V-alpha", sa.V.alpha, "Elastic-net mix for V");
  smooth->add_option("--J-alpha", sa.J.alpha, "Elastic-net mix for J");
  smooth->add_option("--box-lo", sa.box_lo, "Lower bound on every state component");
  smooth->add_option("--box-hi", sa.box_hi, "Upper bound on every state component");
  smooth->add_option("--out", sa.out, "Output CSV (stdout when omitted)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run one of the benchmark experiments");
  bench->add_option("experiment", ba.experiment, "Experiment")
      ->required()
      ->check(CLI::IsMember({"rates", "dc-impulse", "dc-outliers", "constrained"}));
  bench->add_option("--config", ba.config, "Experiment TOML")->check(CLI::ExistingFile);
  bench->add_option("--out", ba.out, "Output directory")->required();
  bench->add_option("--seed", ba.seed, "Master seed (overrides the config)");
  bench->add_option("--runs", ba.runs, "Monte Carlo runs (overrides the config)");
  bench->add_option("--threads", ba.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*smooth) return run_smooth(sa);
    return run_bench(ba);
  } catch (const Error& e) {
    std::cerr << "gks: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "gks: " << e.what() << '\n';
    return kExitSolver;
  }
}
