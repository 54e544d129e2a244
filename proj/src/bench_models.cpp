#include "gks/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gks {

const Mat& dc_motor_A() {
  static const Mat A = (Mat(2, 2) << 0.7, 0.0, 0.084, 1.0).finished();
  return A;
}

const Vec& dc_motor_b() {
  static const Vec b = (Vec(2) << 11.81, 0.62).finished();
  return b;
}

LtvModel dc_motor_model(double q_scale, double r_var, std::size_t N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "dc motor model needs N >= 1");
  const Vec& b = dc_motor_b();
  LtvModel md;
  md.N = N;
  md.n = 2;
  md.m = 1;
  md.p = 1;
  md.A_seq.assign(N, dc_motor_A());
  md.B_seq.assign(N, Mat(b));
  md.C_seq.assign(N, (Mat(1, 2) << 0.0, 1.0).finished());
  md.Q_seq.assign(N, q_scale * b * b.transpose());
  md.R_seq.assign(N, Mat::Constant(1, 1, r_var));
  md.u_seq.assign(N, Vec::Zero(1));
  md.y_seq.assign(N, Vec::Zero(1));
  md.mu = Vec::Zero(2);
  md.Pi = Mat::Zero(2, 2);
  return md;
}

DcInstance simulate_dc_motor(const DcMotorSpec& spec, std::uint64_t seed) {
  DcInstance inst;
  const double nominal_r = spec.sigma_e * spec.sigma_e;
  NoiseSpec process, measurement;
  if (spec.scenario == DcScenario::Impulsive) {
    inst.model = dc_motor_model(spec.alpha, nominal_r, spec.N);
    process = {NoiseKind::BernoulliGaussian, spec.alpha, 1.0};
    measurement = {NoiseKind::Gaussian, 0.0, 1.0};
  } else {
    // generate with the true mixture variance, then hand the smoother the nominal one
    inst.model = dc_motor_model(spec.sigma_d * spec.sigma_d,
                                mixture_variance(spec.alpha, spec.sigma_e, spec.outlier_factor), spec.N);
    process = {NoiseKind::Gaussian, 0.0, 1.0};
    measurement = {NoiseKind::GaussianMixture, spec.alpha, spec.outlier_factor};
  }
  const Trajectory traj = simulate(inst.model, process, measurement, seed);
  inst.model.y_seq = traj.y;
  inst.model.R_seq.assign(spec.N, Mat::Constant(1, 1, nominal_r));
  inst.x = traj.x;
  inst.d.resize(static_cast<Eigen::Index>(spec.N));
  inst.output.resize(static_cast<Eigen::Index>(spec.N));
  for (std::size_t t = 0; t < spec.N; ++t) {
    inst.d(static_cast<Eigen::Index>(t)) = traj.v[t](0) / dc_motor_b()(0);
    inst.output(static_cast<Eigen::Index>(t)) = traj.x[t + 1](1);
  }
  return inst;
}

Vec disturbance_readout(const std::vector<Vec>& xhat) {
  if (xhat.empty()) return Vec();
  const std::size_t N = xhat.size() - 1;
  Vec d(static_cast<Eigen::Index>(N));
  for (std::size_t t = 0; t < N; ++t)
    d(static_cast<Eigen::Index>(t)) = (xhat[t + 1] - dc_motor_A() * xhat[t])(0) / dc_motor_b()(0);
  return d;
}

LtvModel spline_model(double dt, std::size_t N, double r_var, double pi_var) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "spline model needs dt > 0");
  LtvModel md;
  md.N = N;
  md.n = 2;
  md.m = 1;
  md.p = 1;
  md.A_seq.assign(N, (Mat(2, 2) << 1.0, 0.0, dt, 1.0).finished());
  md.B_seq.assign(N, Mat::Zero(2, 1));
  md.C_seq.assign(N, (Mat(1, 2) << 0.0, 1.0).finished());
  md.Q_seq.assign(N, (Mat(2, 2) << dt, dt * dt / 2, dt * dt / 2, dt * dt * dt / 3).finished());
  md.R_seq.assign(N, Mat::Constant(1, 1, r_var));
  md.u_seq.assign(N, Vec::Zero(1));
  md.y_seq.assign(N, Vec::Zero(1));
  md.mu = Vec::Zero(2);
  md.Pi = pi_var * Mat::Identity(2, 2);
  return md;
}

Vec spline_truth(SplineSignal signal, double t) {
  if (signal == SplineSignal::Sine) return (Vec(2) << -std::cos(t), std::sin(-t)).finished();
  const double e = std::exp(std::sin(4 * t));
  return (Vec(2) << 4 * std::cos(4 * t) * e, e).finished();
}

SplineInstance simulate_spline(const SplineSpec& spec, std::uint64_t seed) {
  SplineInstance inst;
  inst.model = spline_model(spec.dt, spec.N, spec.sigma * spec.sigma);
  Rng rng(seed);
  for (std::size_t k = 0; k <= spec.N; ++k) inst.x.push_back(spline_truth(spec.signal, spec.dt * k));
  for (std::size_t k = 0; k < spec.N; ++k) {
    const bool outlier = spec.outlier_alpha > 0.0 && rng.bernoulli(spec.outlier_alpha);
    const double e = (outlier ? spec.outlier_sigma : spec.sigma) * rng.normal();
    inst.model.y_seq[k] = Vec::Constant(1, inst.x[k + 1](1) + e);
  }
  return inst;
}

double fit_metric(const Vec& estimate, const Vec& truth) {
  if (estimate.size() != truth.size()) throw Error(ErrorCode::DimensionMismatch, "fit_metric length mismatch");
  const double nt = truth.norm();
  if (nt == 0.0) throw Error(ErrorCode::ZeroTruth, "fit metric is undefined for a zero truth signal");
  return 100.0 * (1.0 - (estimate - truth).norm() / nt);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> FitTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorCode::InvalidArgument, "no column named " + name);
  const auto j = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

FitSummary FitTable::summary(const std::string& name) const {
  const auto c = column(name);
  return {quantile(c, 0.0), quantile(c, 0.25), quantile(c, 0.5), quantile(c, 0.75), quantile(c, 1.0)};
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (count == 0 || !(lo > 0.0) || !(hi >= lo)) throw Error(ErrorCode::InvalidArgument, "bad log grid");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
  out.back() = hi;
  return out;
}

CvResult cross_validate_gamma(const SmootherProblem& p, const std::vector<double>& grid, std::size_t folds,
                              std::uint64_t seed, const SmootherSolve& solve) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "cross validation needs a nonempty grid");
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "cross validation needs at least 2 folds");
  const StackedSystem& sys = p.sys;
  const auto m = static_cast<Eigen::Index>(sys.m), n = static_cast<Eigen::Index>(sys.n);

  std::vector<std::size_t> order(sys.N);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> fold_of(sys.N);
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = i % folds;

  CvResult res;
  res.grid = grid;
  for (double gamma : grid) {
    double err = 0.0;
    std::size_t count = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      SmootherProblem q = p;
      q.gamma = gamma;
      for (std::size_t k = 0; k < sys.N; ++k)
        if (fold_of[k] == f) q.sys.Wr[k].setZero();
      const Vec x = solve(q);
      for (std::size_t k = 0; k < sys.N; ++k) {
        if (fold_of[k] != f || sys.Wr[k].isZero(0.0)) continue;
        const auto kk = static_cast<Eigen::Index>(k);
        err += (sys.y.segment(m * kk, m) - sys.C_blocks[k] * x.segment(n * (kk + 1), n)).squaredNorm();
        ++count;
      }
    }
    res.errors.push_back(count ? err / static_cast<double>(count) : 0.0);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (res.errors[i] <= res.errors[best]) best = i;
  res.gamma = grid[best];
  return res;
}

}  // namespace gks
