#include "gks/statespace.hpp"

#include "gks/linalg.hpp"

#include <cmath>

namespace gks {

const char* to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::LengthMismatch: return "LengthMismatch";
    case ViolationCode::DimMismatch: return "DimMismatch";
    case ViolationCode::NonFinite: return "NonFinite";
    case ViolationCode::NotSymmetric: return "NotSymmetric";
    case ViolationCode::NotPsd: return "NotPsd";
    case ViolationCode::JointNotPsd: return "JointNotPsd";
  }
  return "Unknown";
}

std::string Violation::to_string() const {
  return std::string(gks::to_string(code)) + "{" + field + "," + std::to_string(t) + "}";
}

namespace {

bool psd_within_tolerance(const Mat& s) {
  if (s.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().sum();
  return ev.minCoeff() >= -1e-10 * scale;
}

struct Checker {
  std::vector<Violation> out;

  void add(ViolationCode c, const char* field, std::size_t t) { out.push_back({c, field, t}); }

  // Returns false when dimensions are off so later checks are skipped.
  bool dims(const Mat& a, std::size_t r, std::size_t c, const char* field, std::size_t t) {
    if (static_cast<std::size_t>(a.rows()) != r || static_cast<std::size_t>(a.cols()) != c) {
      add(ViolationCode::DimMismatch, field, t);
      return false;
    }
    if (!a.allFinite()) {
      add(ViolationCode::NonFinite, field, t);
      return false;
    }
    return true;
  }

  bool dims(const Vec& a, std::size_t r, const char* field, std::size_t t) {
    if (static_cast<std::size_t>(a.size()) != r) {
      add(ViolationCode::DimMismatch, field, t);
      return false;
    }
    if (!a.allFinite()) {
      add(ViolationCode::NonFinite, field, t);
      return false;
    }
    return true;
  }

  void covariance(const Mat& s, std::size_t dim, const char* field, std::size_t t) {
    if (!dims(s, dim, dim, field, t)) return;
    if (!is_symmetric(s, 1e-12)) {
      add(ViolationCode::NotSymmetric, field, t);
      return;
    }
    if (!psd_within_tolerance(s)) add(ViolationCode::NotPsd, field, t);
  }
};

bool has_cross(const LtvModel& model, std::size_t t) {
  return !model.S_seq.empty() && t >= 1 && t < model.S_seq.size() && model.S_seq[t].size() > 0 &&
         model.S_seq[t].cwiseAbs().maxCoeff() > 0.0;
}

Vec offset_at(const LtvModel& model, std::size_t t) {
  Vec z = model.B_seq[t] * model.u_seq[t];
  if (!model.offset_seq.empty()) z += model.offset_seq[t];
  return z;
}

}  // namespace

std::vector<Violation> validate(const LtvModel& model) {
  Checker ck;
  const std::size_t N = model.N, n = model.n, m = model.m, p = model.p;
  auto length = [&](std::size_t len, const char* field, bool optional) {
    if (optional && len == 0) return true;
    if (len != N) {
      ck.add(ViolationCode::LengthMismatch, field, len);
      return false;
    }
    return true;
  };
  const bool a_ok = length(model.A_seq.size(), "A", false);
  const bool b_ok = length(model.B_seq.size(), "B", false);
  const bool c_ok = length(model.C_seq.size(), "C", false);
  const bool q_ok = length(model.Q_seq.size(), "Q", false);
  const bool r_ok = length(model.R_seq.size(), "R", false);
  const bool s_ok = length(model.S_seq.size(), "S", true);
  const bool u_ok = length(model.u_seq.size(), "u", false);
  const bool y_ok = length(model.y_seq.size(), "y", false);
  const bool o_ok = length(model.offset_seq.size(), "offset", true);
  length(model.observed.size(), "observed", true);

  ck.dims(model.mu, n, "mu", 0);
  ck.covariance(model.Pi, n, "Pi", 0);

  for (std::size_t t = 0; t < N; ++t) {
    if (a_ok) ck.dims(model.A_seq[t], n, n, "A", t);
    if (b_ok) ck.dims(model.B_seq[t], n, p, "B", t);
    if (u_ok) ck.dims(model.u_seq[t], p, "u", t);
    if (q_ok) ck.covariance(model.Q_seq[t], n, "Q", t);
    if (o_ok && !model.offset_seq.empty()) ck.dims(model.offset_seq[t], n, "offset", t);
    // Measurement-side entries are reported by their time index k = t + 1.
    if (c_ok) ck.dims(model.C_seq[t], m, n, "C", t + 1);
    if (r_ok) ck.covariance(model.R_seq[t], m, "R", t + 1);
    if (y_ok) ck.dims(model.y_seq[t], m, "y", t + 1);
  }

  if (s_ok && !model.S_seq.empty() && q_ok && r_ok) {
    for (std::size_t t = 1; t < N; ++t) {
      if (model.S_seq[t].size() == 0) continue;
      if (!ck.dims(model.S_seq[t], n, m, "S", t)) continue;
      const Mat& Q = model.Q_seq[t];
      const Mat& R = model.R_seq[t - 1];
      if (Q.rows() != static_cast<Eigen::Index>(n) || R.rows() != static_cast<Eigen::Index>(m)) continue;
      Mat joint(n + m, n + m);
      joint << Q, model.S_seq[t], model.S_seq[t].transpose(), R;
      if (!psd_within_tolerance(joint)) ck.add(ViolationCode::JointNotPsd, "S", t);
    }
  }
  return ck.out;
}

LtvModel decorrelate(const LtvModel& model) {
  LtvModel out = model;
  out.S_seq.clear();
  if (model.S_seq.empty()) return out;
  if (out.offset_seq.empty()) out.offset_seq.assign(model.N, Vec::Zero(model.n));
  for (std::size_t t = 1; t < model.N; ++t) {
    if (!has_cross(model, t)) continue;
    const std::size_t k = t - 1;  // measurement at time t
    if (!model.is_observed(k)) continue;
    const Mat& S = model.S_seq[t];
    const Mat& R = model.R_seq[k];
    const Mat Rp = sym_pinv(R);
    const Mat Rperp = Mat::Identity(model.m, model.m) - R * Rp;
    if ((S * Rperp).norm() > 1e-10 * std::max(S.norm(), 1e-300))
      throw Error(ErrorCode::SingularR, "cross-covariance has a component in null(R)", t);
    const Mat K = S * Rp;
    out.A_seq[t] = model.A_seq[t] - K * model.C_seq[k];
    Mat Qt = model.Q_seq[t] - K * S.transpose();
    out.Q_seq[t] = 0.5 * (Qt + Qt.transpose());
    out.offset_seq[t] += K * model.y_seq[k];
  }
  return out;
}

PseudoWeights pseudo_weights(const LtvModel& model) {
  bool cross = false;
  for (std::size_t t = 1; t < model.N; ++t) cross = cross || has_cross(model, t);
  const LtvModel md = cross ? decorrelate(model) : model;
  const std::size_t N = md.N;

  PseudoWeights pw;
  pw.R_pinv.resize(N);
  pw.R_perp.resize(N);
  pw.Q_pinv.resize(N + 1);
  pw.Q_perp.resize(N + 1);

  auto fill_q = [&](std::size_t idx, const Mat& cov) {
    pw.Q_pinv[idx] = sym_pinv(cov);
    const Mat U = null_basis(cov);
    pw.Q_perp[idx] = U * U.transpose();
    return U;
  };

  const Mat U0 = fill_q(0, md.Pi);
  for (Eigen::Index j = 0; j < U0.cols(); ++j) {
    const Vec u = U0.col(j);
    pw.equalities.push_back({0, u, Vec(), u.dot(md.mu)});
  }
  for (std::size_t t = 0; t < N; ++t) {
    const Mat U = fill_q(t + 1, md.Q_seq[t]);
    if (U.cols() == 0) continue;
    const Vec z = offset_at(md, t);
    for (Eigen::Index j = 0; j < U.cols(); ++j) {
      const Vec u = U.col(j);
      pw.equalities.push_back({t + 1, u, -md.A_seq[t].transpose() * u, u.dot(z)});
    }
  }
  for (std::size_t k = 0; k < N; ++k) {
    pw.R_pinv[k] = sym_pinv(md.R_seq[k]);
    const Mat U = null_basis(md.R_seq[k]);
    pw.R_perp[k] = U * U.transpose();
    if (!md.is_observed(k)) continue;
    const double cscale = std::max(md.C_seq[k].norm(), 1e-300);
    for (Eigen::Index j = 0; j < U.cols(); ++j) {
      const Vec u = U.col(j);
      const Vec c = md.C_seq[k].transpose() * u;
      if (c.norm() <= 1e-12 * cscale) continue;
      pw.equalities.push_back({k + 1, c, Vec(), u.dot(md.y_seq[k])});
    }
  }
  return pw;
}

StackedSystem stack(const LtvModel& model) {
  const auto violations = validate(model);
  if (!violations.empty())
    throw Error(ErrorCode::InvalidModel, "model fails validation: " + violations.front().to_string());
  for (std::size_t t = 1; t < model.N; ++t)
    if (has_cross(model, t))
      throw Error(ErrorCode::InvalidModel, "cross-covariance present; decorrelate the model first", t);

  const std::size_t N = model.N, n = model.n, m = model.m;
  StackedSystem sys;
  sys.n = n;
  sys.m = m;
  sys.N = N;
  sys.A_blocks = model.A_seq;
  sys.C_blocks = model.C_seq;
  sys.Q_blocks.reserve(N + 1);
  sys.Q_blocks.push_back(model.Pi);
  for (const auto& q : model.Q_seq) sys.Q_blocks.push_back(q);
  sys.R_blocks = model.R_seq;

  sys.z.resize(n * (N + 1));
  sys.z.head(n) = model.mu;
  for (std::size_t t = 0; t < N; ++t) sys.z.segment(n * (t + 1), n) = offset_at(model, t);
  sys.y.resize(m * N);
  for (std::size_t k = 0; k < N; ++k) sys.y.segment(m * k, m) = model.y_seq[k];

  sys.Wq.reserve(N + 1);
  for (const auto& q : sys.Q_blocks) sys.Wq.push_back(sym_pinv_sqrt(q));
  sys.Wr.reserve(N);
  for (std::size_t k = 0; k < N; ++k)
    sys.Wr.push_back(model.is_observed(k) ? sym_pinv_sqrt(model.R_seq[k]) : Mat::Zero(m, m));

  sys.equalities = pseudo_weights(model).equalities;
  return sys;
}

Vec apply_A(const StackedSystem& sys, const Vec& x) {
  const std::size_t n = sys.n;
  Vec out = x;
  for (std::size_t t = 0; t < sys.N; ++t)
    out.segment(n * (t + 1), n).noalias() -= sys.A_blocks[t] * x.segment(n * t, n);
  return out;
}

Vec apply_At(const StackedSystem& sys, const Vec& w) {
  const std::size_t n = sys.n;
  Vec out = w;
  for (std::size_t t = 0; t < sys.N; ++t)
    out.segment(n * t, n).noalias() -= sys.A_blocks[t].transpose() * w.segment(n * (t + 1), n);
  return out;
}

Vec apply_C(const StackedSystem& sys, const Vec& x) {
  const std::size_t n = sys.n, m = sys.m;
  Vec out(m * sys.N);
  for (std::size_t k = 0; k < sys.N; ++k)
    out.segment(m * k, m).noalias() = sys.C_blocks[k] * x.segment(n * (k + 1), n);
  return out;
}

Vec apply_Ct(const StackedSystem& sys, const Vec& w) {
  const std::size_t n = sys.n, m = sys.m;
  Vec out = Vec::Zero(n * (sys.N + 1));
  for (std::size_t k = 0; k < sys.N; ++k)
    out.segment(n * (k + 1), n).noalias() = sys.C_blocks[k].transpose() * w.segment(m * k, m);
  return out;
}

Vec apply_Wq(const StackedSystem& sys, const Vec& w) {
  const std::size_t n = sys.n;
  Vec out(w.size());
  for (std::size_t t = 0; t <= sys.N; ++t) out.segment(n * t, n).noalias() = sys.Wq[t] * w.segment(n * t, n);
  return out;
}

Vec apply_Wr(const StackedSystem& sys, const Vec& w) {
  const std::size_t m = sys.m;
  Vec out(w.size());
  for (std::size_t k = 0; k < sys.N; ++k) out.segment(m * k, m).noalias() = sys.Wr[k] * w.segment(m * k, m);
  return out;
}

Vec measurement_residual(const StackedSystem& sys, const Vec& x) {
  return apply_Wr(sys, sys.y - apply_C(sys, x));
}

Vec process_residual(const StackedSystem& sys, const Vec& x) {
  return apply_Wq(sys, sys.z - apply_A(sys, x));
}

double least_squares_objective(const StackedSystem& sys, const Vec& x) {
  return measurement_residual(sys, x).squaredNorm() + process_residual(sys, x).squaredNorm();
}

double standardized_draw(const NoiseSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::Gaussian:
      return rng.normal();
    case NoiseKind::BernoulliGaussian: {
      const bool hit = rng.bernoulli(spec.alpha);
      return hit ? rng.normal() / std::sqrt(spec.alpha) : 0.0;
    }
    case NoiseKind::GaussianMixture: {
      const bool outlier = rng.bernoulli(spec.alpha);
      const double s = 1.0 / std::sqrt((1.0 - spec.alpha) + spec.alpha * spec.factor * spec.factor);
      return (outlier ? spec.factor : 1.0) * s * rng.normal();
    }
  }
  return 0.0;
}

double mixture_variance(double alpha, double sigma, double factor) {
  return (1.0 - alpha) * sigma * sigma + alpha * (factor * sigma) * (factor * sigma);
}

Trajectory simulate(const LtvModel& model, const NoiseSpec& process, const NoiseSpec& measurement,
                    std::uint64_t seed) {
  const auto violations = validate(model);
  if (!violations.empty())
    throw Error(ErrorCode::InvalidModel, "model fails validation: " + violations.front().to_string());
  const std::size_t N = model.N, n = model.n, m = model.m;
  Rng rng(seed);
  Trajectory tr;
  tr.v.assign(N, Vec::Zero(n));
  tr.e.assign(N, Vec::Zero(m));
  std::vector<bool> e_drawn(N, false);

  auto draw = [&](const NoiseSpec& spec, const Mat& L) {
    Vec xi(L.cols());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = standardized_draw(spec, rng);
    return Vec(L * xi);
  };

  const Mat Lpi = psd_factor(model.Pi);
  Vec xi0(Lpi.cols());
  for (Eigen::Index i = 0; i < xi0.size(); ++i) xi0(i) = rng.normal();
  Vec x = model.mu + Lpi * xi0;

  for (std::size_t t = 0; t < N; ++t) {
    if (has_cross(model, t)) {
      Mat joint(n + m, n + m);
      joint << model.Q_seq[t], model.S_seq[t], model.S_seq[t].transpose(), model.R_seq[t - 1];
      const Vec ve = draw(NoiseSpec{NoiseKind::Gaussian}, psd_factor(joint));
      tr.v[t] = ve.head(n);
      tr.e[t - 1] = ve.tail(m);
      e_drawn[t - 1] = true;
    } else if (process.kind != NoiseKind::None) {
      tr.v[t] = draw(process, psd_factor(model.Q_seq[t]));
    }
  }
  for (std::size_t k = 0; k < N; ++k) {
    if (e_drawn[k] || measurement.kind == NoiseKind::None) continue;
    tr.e[k] = draw(measurement, psd_factor(model.R_seq[k]));
  }

  tr.x.reserve(N + 1);
  tr.y.reserve(N);
  tr.x.push_back(x);
  for (std::size_t t = 0; t < N; ++t) {
    x = model.A_seq[t] * x + offset_at(model, t) + tr.v[t];
    tr.x.push_back(x);
    tr.y.push_back(model.C_seq[t] * x + tr.e[t]);
  }
  return tr;
}

std::vector<Vec> kalman_smooth(const LtvModel& input) {
  bool cross = false;
  for (std::size_t t = 1; t < input.N; ++t) cross = cross || has_cross(input, t);
  const LtvModel model = cross ? decorrelate(input) : input;
  const std::size_t N = model.N, n = model.n;
  const Mat I = Mat::Identity(n, n);

  std::vector<Vec> xf(N + 1), xp(N + 1);
  std::vector<Mat> Pf(N + 1), Pp(N + 1);
  xf[0] = model.mu;
  Pf[0] = model.Pi;
  for (std::size_t t = 0; t < N; ++t) {
    const Mat& A = model.A_seq[t];
    xp[t + 1] = A * xf[t] + offset_at(model, t);
    Mat P = A * Pf[t] * A.transpose() + model.Q_seq[t];
    Pp[t + 1] = 0.5 * (P + P.transpose());
    if (!model.is_observed(t)) {
      xf[t + 1] = xp[t + 1];
      Pf[t + 1] = Pp[t + 1];
      continue;
    }
    const Mat& C = model.C_seq[t];
    const Mat& R = model.R_seq[t];
    const Mat S = C * Pp[t + 1] * C.transpose() + R;
    const Mat K = Pp[t + 1] * C.transpose() * sym_pinv(S);
    xf[t + 1] = xp[t + 1] + K * (model.y_seq[t] - C * xp[t + 1]);
    const Mat IKC = I - K * C;
    Mat Pu = IKC * Pp[t + 1] * IKC.transpose() + K * R * K.transpose();
    Pf[t + 1] = 0.5 * (Pu + Pu.transpose());
  }

  std::vector<Vec> xs(N + 1);
  xs[N] = xf[N];
  for (std::size_t t = N; t-- > 0;) {
    const Mat J = Pf[t] * model.A_seq[t].transpose() * sym_pinv(Pp[t + 1]);
    xs[t] = xf[t] + J * (xs[t + 1] - xp[t + 1]);
  }
  return xs;
}

Vec flatten(const std::vector<Vec>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.size();
  Vec out(total);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    out.segment(off, b.size()) = b;
    off += b.size();
  }
  return out;
}

std::vector<Vec> unflatten(const Vec& x, std::size_t block_size) {
  if (block_size == 0 || x.size() % static_cast<Eigen::Index>(block_size) != 0)
    throw Error(ErrorCode::DimensionMismatch, "vector length is not a multiple of the block size");
  std::vector<Vec> out(x.size() / block_size);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.segment(i * block_size, block_size);
  return out;
}

}  // namespace gks
