#include "firstorder_internal.hpp"

#include <cmath>

namespace gks {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

void check_problem(const SmootherProblem& p) {
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma))
    throw Error(ErrorCode::InvalidArgument, "gamma must be positive and finite");
  check_loss(p.V);
  check_loss(p.J);
  const auto dim = static_cast<Eigen::Index>(p.sys.state_dim());
  if (const auto* box = std::get_if<Box>(&p.constraints)) {
    if (box->lo.size() != dim || box->hi.size() != dim)
      throw Error(ErrorCode::DimensionMismatch, "box bounds must cover every state coordinate");
    if ((box->hi - box->lo).minCoeff() < 0.0) throw Error(ErrorCode::InvalidArgument, "box has lo > hi");
  }
  if (const auto* poly = std::get_if<Polyhedral>(&p.constraints)) {
    if (poly->D.rows() != dim || poly->D.cols() != poly->d.size())
      throw Error(ErrorCode::DimensionMismatch, "polyhedral constraint D/d sizes do not match the state");
  }
}

double objective(const SmootherProblem& p, const Vec& x) {
  return eval_sum(p.V, measurement_residual(p.sys, x), p.sys.m) +
         p.gamma * eval_sum(p.J, process_residual(p.sys, x), p.sys.n);
}

Vec grad_smooth(const SmootherProblem& p, const Vec& x) {
  const Vec gm = gradient(p.V, measurement_residual(p.sys, x));
  const Vec gp = gradient(p.J, process_residual(p.sys, x));
  return -apply_Ct(p.sys, apply_Wr(p.sys, gm)) - p.gamma * apply_At(p.sys, apply_Wq(p.sys, gp));
}

Vec objective_subgradient(const SmootherProblem& p, const Vec& x) {
  const Vec gm = subgradient(p.V, measurement_residual(p.sys, x), p.sys.m);
  const Vec gp = subgradient(p.J, process_residual(p.sys, x), p.sys.n);
  return -apply_Ct(p.sys, apply_Wr(p.sys, gm)) - p.gamma * apply_At(p.sys, apply_Wq(p.sys, gp));
}

double lipschitz_bound(const SmootherProblem& p) {
  const BlockTridiag T = assemble_weighted(p.sys, 1.0, p.gamma, 0.0);
  return power_iteration([&](const Vec& v) { return matvec(T, v); }, T.dim()).upper_bound;
}

SolverReport solve_subgradient(const SmootherProblem& p, const SubgradientOptions& opt) {
  check_problem(p);
  detail::require_no_equalities(p, "subgradient");
  detail::Stopwatch clock;
  SolverReport rep;
  Vec x = project(p.constraints, Vec::Zero(p.sys.state_dim()));
  const double normalized = opt.delta / (opt.lipschitz * std::sqrt(static_cast<double>(opt.max_iters)));
  rep.records.reserve(opt.max_iters);
  for (int k = 1; k <= opt.max_iters; ++k) {
    const double f = objective(p, x);
    if (f < rep.best_objective) {
      rep.best_objective = f;
      rep.x = x;
    }
    const Vec g = objective_subgradient(p, x);
    double alpha = opt.c;
    if (opt.rule == StepRule::Harmonic) alpha = opt.c / k;
    if (opt.rule == StepRule::Normalized) alpha = normalized;
    rep.records.push_back({k, f, alpha, g.norm(), 0.0, clock.seconds()});
    x = project(p.constraints, x - alpha * g);
    rep.iterations = k;
  }
  const double f = objective(p, x);
  if (f < rep.best_objective) {
    rep.best_objective = f;
    rep.x = x;
  }
  rep.reason = Termination::MaxIterations;
  return rep;
}

double fista_next_s(double s) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s * s)); }

namespace {

SolverReport prox_grad_impl(const SmootherProblem& p, const ProxGradOptions& opt, bool accelerate) {
  check_problem(p);
  detail::require_no_equalities(p, accelerate ? "fista" : "proxgrad");
  if (!is_smooth(p.V) || !is_smooth(p.J))
    throw Error(ErrorCode::NonSmoothLoss, "proximal gradient needs quadratic or Huber V and J");
  detail::Stopwatch clock;
  const double beta = lipschitz_bound(p);
  SolverReport rep;
  Vec x = Vec::Zero(p.sys.state_dim());
  Vec y = x;
  double s = 1.0;
  for (int k = 1; k <= opt.max_iters; ++k) {
    const Vec base = accelerate ? y : x;
    const Vec next = project(p.constraints, base - grad_smooth(p, base) / beta);
    const double residual = (next - base).norm();
    if (accelerate && opt.restart_every > 0 && k % opt.restart_every == 0) {
      s = 1.0;
      y = next;
    } else if (accelerate) {
      const double s_next = fista_next_s(s);
      y = next + ((s - 1.0) / s_next) * (next - x);
      s = s_next;
    }
    x = next;
    const double f = objective(p, x);
    rep.best_objective = std::min(rep.best_objective, f);
    rep.records.push_back({k, f, 1.0 / beta, residual, 0.0, clock.seconds()});
    rep.iterations = k;
    if (residual <= opt.eps) {
      rep.reason = Termination::Converged;
      break;
    }
  }
  rep.x = x;
  return rep;
}

}  // namespace

SolverReport solve_prox_grad(const SmootherProblem& p, const ProxGradOptions& opt) {
  return prox_grad_impl(p, opt, false);
}

SolverReport solve_fista(const SmootherProblem& p, const ProxGradOptions& opt) {
  return prox_grad_impl(p, opt, true);
}

}  // namespace gks
