#pragma once

#include "gks/firstorder.hpp"
#include "gks/interior.hpp"
#include "gks/rng.hpp"
#include "gks/statespace.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace gks {

// ---------------------------------------------------------------- models

/// DC motor: A = [[0.7, 0], [0.084, 1]], b = (11.81, 0.62), C = (0, 1),
/// x₀ = 0 (Π = 0), u = 0, Q = q_scale·bbᵀ, R = r_var.
LtvModel dc_motor_model(double q_scale, double r_var, std::size_t N);

const Mat& dc_motor_A();
const Vec& dc_motor_b();

enum class DcScenario { Impulsive, Outliers };

struct DcMotorSpec {
  DcScenario scenario = DcScenario::Impulsive;
  std::size_t N = 200;
  double alpha = 0.01;           ///< impulse probability, or outlier fraction
  double sigma_e = 0.1;          ///< nominal measurement standard deviation
  double sigma_d = 0.1;          ///< Gaussian disturbance std (Outliers scenario)
  double outlier_factor = 100.0;
};

/// A simulated instance: `model` carries the data and nominal covariances
/// (Q = α bbᵀ or σ_d² bbᵀ, R = σ_e²).
struct DcInstance {
  LtvModel model;
  std::vector<Vec> x;      ///< true states x₀..x_N
  Vec d;                   ///< true disturbances d₀..d_{N−1}
  Vec output;              ///< noiseless outputs C x_t, t = 1..N
};

DcInstance simulate_dc_motor(const DcMotorSpec& spec, std::uint64_t seed);

/// d̂_t = (1/11.81)·[x̂_{t+1} − A x̂_t]₀ for t = 0..N−1.
Vec disturbance_readout(const std::vector<Vec>& xhat);

/// Integrated Brownian motion: transition [[1, 0], [Δt, 1]],
/// Q = [[Δt, Δt²/2], [Δt²/2, Δt³/3]], C = (0, 1), R = r_var, μ = 0, Π = pi_var·I.
LtvModel spline_model(double dt, std::size_t N, double r_var, double pi_var = 100.0);

enum class SplineSignal { Sine, ExpSin };

struct SplineSpec {
  SplineSignal signal = SplineSignal::Sine;
  double dt = 0.1;
  std::size_t N = 100;
  double sigma = 0.1;          ///< nominal measurement std (also used for R)
  double outlier_alpha = 0.0;  ///< fraction of outliers
  double outlier_sigma = 1.0;  ///< outlier std
};

/// Truth x(t) = (ẋ(t), x(t)) with x(t) = sin(−t) (Sine) or exp(sin 4t) (ExpSin).
Vec spline_truth(SplineSignal signal, double t);

struct SplineInstance {
  LtvModel model;
  std::vector<Vec> x;  ///< truth at t = kΔt, k = 0..N
};

SplineInstance simulate_spline(const SplineSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------- metrics

/// 100·(1 − ‖estimate − truth‖/‖truth‖). Throws ZeroTruth when ‖truth‖ = 0.
double fit_metric(const Vec& estimate, const Vec& truth);

/// Linear-interpolation quantile of unsorted data (q ∈ [0, 1]).
double quantile(std::vector<double> values, double q);

struct FitSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Per-run fit values; one column per estimator.
struct FitTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
  FitSummary summary(const std::string& name) const;
};

/// count points from lo to hi, logarithmically spaced.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

using SmootherSolve = std::function<Vec(const SmootherProblem&)>;

struct CvResult {
  double gamma = 0.0;
  std::vector<double> grid;
  std::vector<double> errors;  ///< mean held-out squared error per grid point
};

/// K-fold cross validation over measurement times. Held-out rows get a zero
/// weight, the fold is smoothed with `solve`, and the score is
/// Σ‖y_k − C_k x̂_k‖² over held-out k. Ties go to the larger γ.
CvResult cross_validate_gamma(const SmootherProblem& p, const std::vector<double>& grid, std::size_t folds,
                              std::uint64_t seed, const SmootherSolve& solve);

// ---------------------------------------------------------------- config / csv

struct ExperimentConfig {
  std::string experiment;  ///< rates | dc-impulse | dc-outliers | constrained
  std::uint64_t seed = 0;
  std::size_t runs = 200;
  std::size_t N = 0;  ///< 0 selects the experiment default
  double alpha = -1.0;
  double sigma = -1.0;
  double sigma_d = 0.1;
  double outlier_factor = 100.0;
  double outlier_alpha = -1.0;
  double outlier_sigma = -1.0;
  double dt = -1.0;
  double gamma = 1.0;
  double gamma_min = 0.1, gamma_max = 10.0;
  std::size_t gamma_count = 20;
  std::size_t folds = 5;
  double huber_kappa = 1.0;
  double ip_theta = 0.1;
  double ip_eps = 1e-8;
  int ip_max_iters = 200;
  int subgrad_iters = 10000;
  int cp_iters = 2000;
  double cp_tau = 0.0;        ///< explicit CP steps; both 0 selects the scaled rule below
  double cp_sigma = 0.0;
  double cp_tau_scale = 0.3;  ///< τ = scale/L, σ = 0.99/(scale·L)
  unsigned threads = 0;  ///< 0 = hardware concurrency

  /// Fills unset (negative / zero) fields with the experiment defaults and
  /// validates the rest. Defaults (N, α, σ, outlier α, outlier σ, Δt):
  ///   dc-impulse   200, 0.01, 0.1
  ///   dc-outliers  200, 0.1,  0.1
  ///   rates        100, -,    0.5,  0.1, 5,  0.7
  ///   constrained  100, -,    0.05, 0.1, 10, 0.1
  void resolve();
};

/// Parses TOML. Unknown keys and wrong types raise Error{Config}.
ExperimentConfig parse_config_toml(const std::string& text);
ExperimentConfig load_config_toml(const std::string& path);
std::string config_to_toml(const ExperimentConfig& cfg);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// 17 significant digits, so parsing the text gives back the same double.
std::string format_double(double v);
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

CsvTable fit_table_csv(const FitTable& table);

// ---------------------------------------------------------------- experiments

/// Runs f(i) for i in [0, count) on `threads` workers; results land by index.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& f);

struct ImpulseResult {
  FitTable fits;  ///< columns L2-opt, LASSO-CV, gamma
  std::size_t ip_failures = 0;  ///< IP solves that stopped short (their best iterate was used)
};

/// L2-opt: Kalman smoother on Q = α bbᵀ, R = σ². LASSO-CV: Σ(y − Cx)² + γΣ|d_t|
/// subject to the dynamics, γ by 5-fold CV, solved by the interior-point method.
ImpulseResult run_impulsive_mc(const ExperimentConfig& cfg);

/// The LASSO smoother problem of one impulsive instance.
SmootherProblem lasso_problem(const DcInstance& inst, double gamma);

struct OutlierResult {
  FitTable contaminated;  ///< α = cfg.alpha: L2-nom, L2-opt, L1-nom
  FitTable control;       ///< α = 0: L2-nom, L2-opt, L1-nom
  std::size_t ip_failures = 0;
};

/// L2-nom (R = σ²), L2-opt (R = mixture variance) and L1-nom (ℓ₁ loss with
/// weight 1/σ, γ = 2), scored on the noiseless output.
OutlierResult run_outlier_mc(const ExperimentConfig& cfg);

/// The L1-nom problem of one outlier instance.
SmootherProblem l1_nominal_problem(const DcInstance& inst);

struct RateRow {
  std::string solver;
  int iteration = 0;
  double objective = 0.0;
  double gap = 0.0;
  double seconds = 0.0;
};

struct RatesResult {
  std::vector<RateRow> rows;  ///< sorted by (solver, iteration)
  double f_star = 0.0;
};

/// Box-constrained ℓ₁ sine problem solved by projected subgradient (α = 1/κ),
/// CP-V1, CP-V2 and IP (run to eps 1e-12). Objectives are taken at the
/// projected iterate and f* is the smallest value seen.
RatesResult run_rates(const ExperimentConfig& cfg);

/// The sine problem of the rate study.
SmootherProblem rates_problem(const ExperimentConfig& cfg);

/// First iteration at which `solver` reaches gap ≤ tol (−1 if never).
int iterations_to_gap(const RatesResult& r, const std::string& solver, double tol);
/// Gap of `solver` at `iteration` (last recorded value if the run stopped earlier).
double gap_at(const RatesResult& r, const std::string& solver, int iteration);

struct ConstrainedResult {
  std::vector<double> t;
  std::vector<double> truth;
  std::map<std::string, std::vector<double>> estimates;  ///< position estimates
  std::map<std::string, double> rmse;
  double lo = 0.0, hi = 0.0;
};

/// ExpSin with outliers: L2, cL2, Huber (κ on V and J), cHuber, box
/// e⁻¹ ≤ x₂ ≤ e on constrained runs.
ConstrainedResult run_constrained(const ExperimentConfig& cfg);

CsvTable rates_csv(const RatesResult& r);
CsvTable constrained_csv(const ConstrainedResult& r);

}  // namespace gks
