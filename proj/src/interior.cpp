#include "gks/interior.hpp"

#include "firstorder_internal.hpp"

#include <algorithm>
#include <cmath>

namespace gks {

namespace {

constexpr double kRegularization = 1e-10;
constexpr double kFractionToBoundary = 0.995;
constexpr int kMaxHalvings = 30;
constexpr double kSaddlePivotTol = 1e-24;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double row_dot(const LocalRow& row, const Vec& x, std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  double out = row.cur.dot(x.segment(nn * row.block, nn));
  if (row.prev.size()) out += row.prev.dot(x.segment(nn * (row.block - 1), nn));
  return out;
}

void row_axpy(const LocalRow& row, double alpha, Vec& out, std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  out.segment(nn * row.block, nn) += alpha * row.cur;
  if (row.prev.size()) out.segment(nn * (row.block - 1), nn) += alpha * row.prev;
}

void add_outer(BlockTridiag& T, const LocalRow& row, double beta) {
  T.F_seq[row.block] += beta * row.cur * row.cur.transpose();
  if (row.prev.size()) {
    T.F_seq[row.block - 1] += beta * row.prev * row.prev.transpose();
    T.G_seq[row.block - 1] += beta * row.cur * row.prev.transpose();
  }
}

Vec term_b(const PlqTerm& t) { return t.scale * (t.enc.b + t.enc.B.col(0) * t.row.rhs); }
Vec term_Bcoef(const PlqTerm& t) { return -t.scale * t.enc.B.col(0); }
Mat term_M(const PlqTerm& t) { return t.scale * t.enc.M; }

Eigen::Index vk(const PlqTerm& t) { return static_cast<Eigen::Index>(t.enc.k()); }
Eigen::Index hl(const PlqTerm& t) { return static_cast<Eigen::Index>(t.enc.ell()); }
Eigen::Index vo(const PlqTerm& t) { return static_cast<Eigen::Index>(t.v_offset); }
Eigen::Index ho(const PlqTerm& t) { return static_cast<Eigen::Index>(t.h_offset); }

// Singular M (l1, Vapnik, elastic net). Encodings with a non-diagonal M are
// treated as degenerate.
bool degenerate(const Mat& M) {
  return !M.isDiagonal(0.0) || (M.size() && M.diagonal().minCoeff() <= 0.0);
}

bool is_zero_row(const LocalRow& row) {
  return row.rhs == 0.0 && row.cur.isZero(0.0) && (row.prev.size() == 0 || row.prev.isZero(0.0));
}

LocalRow state_row(std::size_t n, std::size_t block, Eigen::Index coord, double sign, double rhs) {
  LocalRow row;
  row.block = block;
  row.cur = Vec::Zero(static_cast<Eigen::Index>(n));
  row.cur(coord) = sign;
  row.rhs = rhs;
  return row;
}

void add_box(ConstrainedPlqProblem& prob, const Vec& lo, const Vec& hi) {
  const auto n = static_cast<Eigen::Index>(prob.n);
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    const auto block = static_cast<std::size_t>(i / n);
    if (std::isfinite(hi(i))) prob.inequalities.push_back(state_row(prob.n, block, i % n, 1.0, hi(i)));
    if (std::isfinite(lo(i))) prob.inequalities.push_back(state_row(prob.n, block, i % n, -1.0, -lo(i)));
  }
}

Vec interior_start(const Vec& lo, const Vec& hi) {
  Vec x = Vec::Zero(lo.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool fl = std::isfinite(lo(i)), fh = std::isfinite(hi(i));
    if (fl && fh && !(lo(i) < 0.0 && 0.0 < hi(i))) x(i) = 0.5 * (lo(i) + hi(i));
    else if (fl && !fh && lo(i) >= 0.0) x(i) = lo(i) + 1.0;
    else if (!fl && fh && hi(i) <= 0.0) x(i) = hi(i) - 1.0;
  }
  return x;
}

LocalRow column_to_row(const Vec& col, std::size_t n, std::size_t N, std::size_t j) {
  const auto nn = static_cast<Eigen::Index>(n);
  std::vector<std::size_t> blocks;
  for (std::size_t k = 0; k <= N; ++k)
    if (!col.segment(nn * k, nn).isZero(0.0)) blocks.push_back(k);
  if (blocks.size() > 2 || (blocks.size() == 2 && blocks[1] != blocks[0] + 1))
    throw Error(ErrorCode::UnsupportedConstraint, "polyhedral constraint column couples non-adjacent times", j);
  LocalRow row;
  row.block = blocks.empty() ? 0 : blocks.back();
  row.cur = col.segment(nn * row.block, nn);
  if (blocks.size() == 2) row.prev = col.segment(nn * blocks[0], nn);
  return row;
}

}  // namespace

void add_term(ConstrainedPlqProblem& prob, PlqTerm term) {
  term.v_offset = prob.k;
  term.h_offset = prob.ell;
  prob.k += term.enc.k();
  prob.ell += term.enc.ell();
  prob.terms.push_back(std::move(term));
}

ConstrainedPlqProblem smoother_to_plq(const SmootherProblem& p) {
  check_problem(p);
  const StackedSystem& sys = p.sys;
  const PlqPenalty encV = plq_encoding(p.V);
  const PlqPenalty encJ = plq_encoding(p.J);
  ConstrainedPlqProblem prob;
  prob.n = sys.n;
  prob.N = sys.N;

  auto add_rows = [&](const Mat& cur, const Mat& prev, const Vec& c, std::size_t block, const ScalarLoss& loss,
                      const PlqPenalty& enc, double scale) {
    for (Eigen::Index i = 0; i < cur.rows(); ++i) {
      PlqTerm t;
      t.row.block = block;
      t.row.cur = cur.row(i).transpose();
      if (prev.size()) t.row.prev = prev.row(i).transpose();
      t.row.rhs = c(i);
      if (is_zero_row(t.row)) continue;
      t.loss = loss;
      t.scale = scale;
      t.enc = enc;
      add_term(prob, std::move(t));
    }
  };

  const auto n = static_cast<Eigen::Index>(sys.n), m = static_cast<Eigen::Index>(sys.m);
  for (std::size_t k = 0; k < sys.N; ++k)
    add_rows(sys.Wr[k] * sys.C_blocks[k], Mat(), sys.Wr[k] * sys.y.segment(m * k, m), k + 1, p.V, encV, 1.0);
  for (std::size_t t = 0; t <= sys.N; ++t) {
    const Mat prev = t == 0 ? Mat() : Mat(-sys.Wq[t] * sys.A_blocks[t - 1]);
    add_rows(sys.Wq[t], prev, sys.Wq[t] * sys.z.segment(n * t, n), t, p.J, encJ, p.gamma);
  }

  std::visit(overloaded{
                 [](const Unconstrained&) {},
                 [&](const Box& b) {
                   add_box(prob, b.lo, b.hi);
                   prob.x0 = interior_start(b.lo, b.hi);
                 },
                 [&](const BallInf& b) {
                   const auto dim = static_cast<Eigen::Index>(prob.dim());
                   add_box(prob, Vec::Constant(dim, -b.tau), Vec::Constant(dim, b.tau));
                 },
                 [](const Ball2&) {
                   throw Error(ErrorCode::UnsupportedConstraint, "the Euclidean ball is not polyhedral");
                 },
                 [](const Ball1&) {
                   throw Error(ErrorCode::UnsupportedConstraint, "the l1 ball couples all times; not supported by ip");
                 },
                 [&](const Polyhedral& poly) {
                   for (Eigen::Index j = 0; j < poly.D.cols(); ++j) {
                     LocalRow row = column_to_row(poly.D.col(j), sys.n, sys.N, static_cast<std::size_t>(j));
                     row.rhs = poly.d(j);
                     const bool eq = static_cast<std::size_t>(j) < poly.equality.size() && poly.equality[j];
                     (eq ? prob.equalities : prob.inequalities).push_back(std::move(row));
                   }
                 },
             },
             p.constraints);
  prob.equalities.insert(prob.equalities.end(), sys.equalities.begin(), sys.equalities.end());
  return prob;
}

double primal_objective(const ConstrainedPlqProblem& prob, const Vec& x) {
  double out = 0.0;
  for (const auto& t : prob.terms) out += t.scale * eval(t.loss, t.row.rhs - row_dot(t.row, x, prob.n));
  return out;
}

PlqPenalty aggregate_penalty(const ConstrainedPlqProblem& prob) {
  const auto k = static_cast<Eigen::Index>(prob.k), ell = static_cast<Eigen::Index>(prob.ell);
  const auto dim = static_cast<Eigen::Index>(prob.dim());
  PlqPenalty out{Vec::Zero(k), Mat::Zero(k, dim), Mat::Zero(k, k), Mat::Zero(k, ell), Vec::Zero(ell)};
  for (const auto& t : prob.terms) {
    out.b.segment(vo(t), vk(t)) = term_b(t);
    Vec a = Vec::Zero(dim);
    row_axpy(t.row, 1.0, a, prob.n);
    out.B.block(vo(t), 0, vk(t), dim) = term_Bcoef(t) * a.transpose();
    out.M.block(vo(t), vo(t), vk(t), vk(t)) = term_M(t);
    out.H.block(vo(t), ho(t), vk(t), hl(t)) = t.enc.H;
    out.h.segment(ho(t), hl(t)) = t.enc.h;
  }
  return out;
}

DenseConstraints dense_constraints(const ConstrainedPlqProblem& prob) {
  const auto dim = static_cast<Eigen::Index>(prob.dim());
  auto build = [&](const std::vector<LocalRow>& rows, Mat& D, Vec& d) {
    D = Mat::Zero(dim, static_cast<Eigen::Index>(rows.size()));
    d.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      Vec col = Vec::Zero(dim);
      row_axpy(rows[j], 1.0, col, prob.n);
      D.col(static_cast<Eigen::Index>(j)) = col;
      d(static_cast<Eigen::Index>(j)) = rows[j].rhs;
    }
  };
  DenseConstraints out;
  build(prob.inequalities, out.D, out.d);
  build(prob.equalities, out.E, out.e);
  return out;
}

double KktResidual::norm() const {
  return std::sqrt(stationarity.squaredNorm() + plq.squaredNorm() + primal.squaredNorm() + dual.squaredNorm() +
                   comp_s.squaredNorm() + comp_r.squaredNorm() + equality.squaredNorm());
}

double KktResidual::norm_inf() const {
  double out = 0.0;
  for (const Vec* v : {&stationarity, &plq, &primal, &dual, &comp_s, &comp_r, &equality})
    if (v->size()) out = std::max(out, v->cwiseAbs().maxCoeff());
  return out;
}

KktResidual kkt_residual(const ConstrainedPlqProblem& prob, const KktState& st, double mu) {
  KktResidual F;
  F.stationarity = Vec::Zero(st.x.size());
  F.plq.resize(static_cast<Eigen::Index>(prob.k));
  F.dual.resize(static_cast<Eigen::Index>(prob.ell));
  for (const auto& t : prob.terms) {
    const Vec v = st.v.segment(vo(t), vk(t));
    const Vec w = st.w.segment(ho(t), hl(t));
    const Vec Bc = term_Bcoef(t);
    row_axpy(t.row, Bc.dot(v), F.stationarity, prob.n);
    F.plq.segment(vo(t), vk(t)) = term_M(t) * v + t.enc.H * w - Bc * row_dot(t.row, st.x, prob.n) - term_b(t);
    F.dual.segment(ho(t), hl(t)) = t.enc.H.transpose() * v - t.enc.h + st.r.segment(ho(t), hl(t));
  }
  F.primal.resize(static_cast<Eigen::Index>(prob.n1()));
  for (std::size_t j = 0; j < prob.n1(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const LocalRow& row = prob.inequalities[j];
    row_axpy(row, st.omega(jj), F.stationarity, prob.n);
    F.primal(jj) = row_dot(row, st.x, prob.n) - row.rhs + st.s(jj);
  }
  F.equality.resize(static_cast<Eigen::Index>(prob.equalities.size()));
  for (std::size_t j = 0; j < prob.equalities.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const LocalRow& row = prob.equalities[j];
    row_axpy(row, st.lambda(jj), F.stationarity, prob.n);
    F.equality(jj) = row_dot(row, st.x, prob.n) - row.rhs;
  }
  F.comp_s = st.omega.cwiseProduct(st.s).array() - mu;
  F.comp_r = st.w.cwiseProduct(st.r).array() - mu;
  return F;
}

double average_complementarity(const KktState& st) {
  const auto count = st.s.size() + st.r.size();
  if (count == 0) return 0.0;
  return (st.omega.dot(st.s) + st.w.dot(st.r)) / static_cast<double>(count);
}

KktState initial_state(const ConstrainedPlqProblem& prob) {
  const auto dim = static_cast<Eigen::Index>(prob.dim());
  KktState st;
  st.x = prob.x0.size() == dim ? prob.x0 : Vec::Zero(dim);
  st.v = Vec::Zero(static_cast<Eigen::Index>(prob.k));
  st.s.resize(static_cast<Eigen::Index>(prob.n1()));
  for (std::size_t j = 0; j < prob.n1(); ++j)
    st.s(static_cast<Eigen::Index>(j)) = prob.inequalities[j].rhs - row_dot(prob.inequalities[j], st.x, prob.n);
  st.s = st.s.cwiseMax(1.0);
  st.r.resize(static_cast<Eigen::Index>(prob.ell));
  for (const auto& t : prob.terms) st.r.segment(ho(t), hl(t)) = t.enc.h;  // h − Hᵀ0
  st.r = st.r.cwiseMax(1.0);
  st.omega = Vec::Ones(st.s.size());
  st.w = Vec::Ones(st.r.size());
  st.lambda = Vec::Zero(static_cast<Eigen::Index>(prob.equalities.size()));
  st.mu = average_complementarity(st);
  return st;
}

KktState newton_direction(const ConstrainedPlqProblem& prob, const KktState& st, double mu) {
  const KktResidual F = kkt_residual(prob, st, mu);
  const std::size_t n = prob.n;

  BlockTridiag Phi;
  Phi.n = n;
  Phi.N = prob.N;
  Phi.F_seq.assign(prob.N + 1, Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  Phi.G_seq.assign(prob.N, Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  Vec rhs = -F.stationarity;

  // Per-term reduced blocks T_i = M_i + H_i diag(w/r) H_iᵀ and g_i.
  std::vector<Eigen::LDLT<Mat>> Tinv;
  std::vector<Vec> g;
  Tinv.reserve(prob.terms.size());
  g.reserve(prob.terms.size());
  for (const auto& t : prob.terms) {
    const Vec w = st.w.segment(ho(t), hl(t)), r = st.r.segment(ho(t), hl(t));
    Mat T = term_M(t) + t.enc.H * (w.cwiseQuotient(r)).asDiagonal() * t.enc.H.transpose();
    if (degenerate(t.enc.M)) T += kRegularization * Mat::Identity(vk(t), vk(t));
    Tinv.emplace_back(T);
    const Vec gi = -F.plq.segment(vo(t), vk(t)) +
                   t.enc.H * (F.comp_r.segment(ho(t), hl(t)) - w.cwiseProduct(F.dual.segment(ho(t), hl(t))))
                                 .cwiseQuotient(r);
    const Vec Bc = term_Bcoef(t);
    add_outer(Phi, t.row, Bc.dot(Tinv.back().solve(Bc)));
    row_axpy(t.row, -Bc.dot(Tinv.back().solve(gi)), rhs, n);
    g.push_back(gi);
  }
  for (std::size_t j = 0; j < prob.n1(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    add_outer(Phi, prob.inequalities[j], st.omega(jj) / st.s(jj));
    row_axpy(prob.inequalities[j], -(st.omega(jj) * F.primal(jj) - F.comp_s(jj)) / st.s(jj), rhs, n);
  }

  KktState d;
  if (prob.equalities.empty()) {
    try {
      d.x = solve_factored(factor(Phi, 0.0), rhs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotPositiveDefinite && e.code() != ErrorCode::SingularBlock) throw;
      throw Error(ErrorCode::SingularKkt, std::string("reduced Newton system is singular: ") + e.what(), e.index());
    }
    d.lambda = Vec::Zero(0);
  } else {
    const SaddleFactorization saddle(Phi, prob.equalities, kSaddlePivotTol);
    d.x = saddle.solve(rhs, -F.equality, &d.lambda);
  }

  d.v.resize(static_cast<Eigen::Index>(prob.k));
  d.r.resize(static_cast<Eigen::Index>(prob.ell));
  d.w.resize(static_cast<Eigen::Index>(prob.ell));
  for (std::size_t i = 0; i < prob.terms.size(); ++i) {
    const PlqTerm& t = prob.terms[i];
    const Vec dv = Tinv[i].solve(Vec(g[i] + term_Bcoef(t) * row_dot(t.row, d.x, n)));
    d.v.segment(vo(t), vk(t)) = dv;
    const Vec dr = -F.dual.segment(ho(t), hl(t)) - t.enc.H.transpose() * dv;
    d.r.segment(ho(t), hl(t)) = dr;
    d.w.segment(ho(t), hl(t)) =
        (-F.comp_r.segment(ho(t), hl(t)) - st.w.segment(ho(t), hl(t)).cwiseProduct(dr)).cwiseQuotient(st.r.segment(ho(t), hl(t)));
  }
  d.s.resize(static_cast<Eigen::Index>(prob.n1()));
  for (std::size_t j = 0; j < prob.n1(); ++j)
    d.s(static_cast<Eigen::Index>(j)) = -F.primal(static_cast<Eigen::Index>(j)) - row_dot(prob.inequalities[j], d.x, n);
  d.omega = (-F.comp_s - st.omega.cwiseProduct(d.s)).cwiseQuotient(st.s);
  return d;
}

namespace {

KktState advance(const KktState& st, const KktState& d, double gamma, double mu) {
  KktState out;
  out.x = st.x + gamma * d.x;
  out.v = st.v + gamma * d.v;
  out.s = st.s + gamma * d.s;
  out.r = st.r + gamma * d.r;
  out.omega = st.omega + gamma * d.omega;
  out.w = st.w + gamma * d.w;
  out.lambda = st.lambda + gamma * d.lambda;
  out.mu = mu;
  return out;
}

double max_step(const Vec& z, const Vec& dz) {
  double out = kInf;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (dz(i) < 0.0) out = std::min(out, -z(i) / dz(i));
  return out;
}

}  // namespace

NewtonStep newton_step(const ConstrainedPlqProblem& prob, const KktState& st, double mu) {
  NewtonStep out;
  out.direction = newton_direction(prob, st, mu);
  const KktState& d = out.direction;
  const double boundary =
      std::min({max_step(st.s, d.s), max_step(st.r, d.r), max_step(st.omega, d.omega), max_step(st.w, d.w)});
  double gamma = std::min(1.0, kFractionToBoundary * boundary);
  const double merit = kkt_residual(prob, st, mu).norm();
  for (int halving = 0; halving <= kMaxHalvings; ++halving, gamma *= 0.5) {
    KktState trial = advance(st, d, gamma, mu);
    if (kkt_residual(prob, trial, mu).norm() < merit) {
      out.gamma = gamma;
      out.next = std::move(trial);
      return out;
    }
  }
  throw Error(ErrorCode::LineSearchFailure, "no decrease of the KKT residual after 30 halvings");
}

IpResult solve_ip(const ConstrainedPlqProblem& prob, const IpOptions& opt) {
  if (!(opt.theta > 0.0 && opt.theta < 1.0)) throw Error(ErrorCode::InvalidArgument, "ip theta must lie in (0, 1)");
  detail::Stopwatch clock;
  IpResult res;
  KktState st = initial_state(prob);
  KktState best = st;
  double best_res = kkt_residual(prob, st, 0.0).norm_inf();
  for (int it = 0;; ++it) {
    const double avg = average_complementarity(st);
    const double res0 = kkt_residual(prob, st, 0.0).norm_inf();
    if (res0 < best_res) {
      best_res = res0;
      best = st;
    }
    if (avg <= opt.eps && res0 <= opt.eps) {
      res.report.reason = Termination::Converged;
      break;
    }
    if (it == opt.max_iters)
      throw IpFailure(ErrorCode::MaxItersExceeded,
                      "interior point stopped after " + std::to_string(opt.max_iters) +
                          " iterations with KKT residual " + std::to_string(best_res),
                      best, res.report);
    const double mu = opt.theta * avg;
    NewtonStep step;
    try {
      step = newton_step(prob, st, mu);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LineSearchFailure && e.code() != ErrorCode::SingularKkt) throw;
      throw IpFailure(e.code(), std::string(e.what()) + " (KKT residual " + std::to_string(best_res) + ")", best,
                      res.report);
    }
    st = std::move(step.next);
    const double f = primal_objective(prob, st.x);
    res.report.best_objective = std::min(res.report.best_objective, f);
    res.report.records.push_back({it + 1, f, step.gamma, kkt_residual(prob, st, 0.0).norm_inf(),
                                  average_complementarity(st), clock.seconds()});
    res.report.iterations = it + 1;
  }
  res.x = st.x;
  res.report.x = st.x;
  res.report.dual = st.v;
  res.state = std::move(st);
  return res;
}

IpResult solve_ip(const SmootherProblem& p, const IpOptions& opt) { return solve_ip(smoother_to_plq(p), opt); }

double duality_gap(const ConstrainedPlqProblem& prob, const Vec& x, const Vec& v, const Vec& omega,
                   const Vec& lambda, double tol) {
  if (v.size() != static_cast<Eigen::Index>(prob.k) || omega.size() != static_cast<Eigen::Index>(prob.n1()))
    throw Error(ErrorCode::DimensionMismatch, "dual vectors do not match the problem");
  const Vec lam = lambda.size() ? lambda : Vec::Zero(static_cast<Eigen::Index>(prob.equalities.size()));
  if (lam.size() != static_cast<Eigen::Index>(prob.equalities.size()))
    throw Error(ErrorCode::DimensionMismatch, "equality multipliers do not match the problem");
  if (omega.size() && omega.minCoeff() < -tol) throw Error(ErrorCode::DualInfeasible, "omega has a negative entry");

  Vec stat = Vec::Zero(static_cast<Eigen::Index>(prob.dim()));
  double dual = 0.0;
  for (const auto& t : prob.terms) {
    const Vec vi = v.segment(vo(t), vk(t));
    row_axpy(t.row, term_Bcoef(t).dot(vi), stat, prob.n);
    if (hl(t) && (t.enc.H.transpose() * vi - t.enc.h).maxCoeff() > tol)
      throw Error(ErrorCode::DualInfeasible, "v lies outside the PLQ dual set");
    dual += 0.5 * vi.dot(term_M(t) * vi) - term_b(t).dot(vi);
  }
  for (std::size_t j = 0; j < prob.n1(); ++j) {
    const double wj = omega(static_cast<Eigen::Index>(j));
    row_axpy(prob.inequalities[j], wj, stat, prob.n);
    dual += prob.inequalities[j].rhs * wj;
  }
  for (std::size_t j = 0; j < prob.equalities.size(); ++j) {
    const double lj = lam(static_cast<Eigen::Index>(j));
    row_axpy(prob.equalities[j], lj, stat, prob.n);
    dual += prob.equalities[j].rhs * lj;
  }
  if (stat.size() && stat.cwiseAbs().maxCoeff() > tol)
    throw Error(ErrorCode::DualInfeasible,
                "B^T v + D omega + E lambda = 0 violated by " + std::to_string(stat.cwiseAbs().maxCoeff()));
  return primal_objective(prob, x) + dual;
}

}  // namespace gks
