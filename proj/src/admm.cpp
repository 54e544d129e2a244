#include "firstorder_internal.hpp"

namespace gks {

SolverReport solve_admm_general(const AdmmTemplate& tpl, const AdmmOptions& opt) {
  if (!(opt.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "ADMM penalty tau must be positive");
  detail::Stopwatch clock;
  SolverReport rep;
  Vec x = Vec::Zero(tpl.x_dim);
  Vec w = Vec::Zero(tpl.w_dim);
  Vec u = Vec::Zero(tpl.c.size());
  for (int k = 1; k <= opt.max_iters; ++k) {
    x = tpl.x_update(w, u);
    const Vec w_next = tpl.w_update(x, u);
    const Vec rp = tpl.K1(x) + tpl.K2(w_next) - tpl.c;
    u += opt.tau * rp;
    const double primal = rp.norm();
    const double dual = opt.tau * tpl.K1tK2(w_next - w).norm();
    w = w_next;
    const double f = tpl.objective ? tpl.objective(x, w) : 0.0;
    rep.best_objective = std::min(rep.best_objective, f);
    rep.records.push_back({k, f, opt.tau, primal, dual, clock.seconds()});
    rep.iterations = k;
    if (primal <= opt.eps && dual <= opt.eps) {
      rep.reason = Termination::Converged;
      break;
    }
  }
  rep.x = x;
  rep.aux = w;
  rep.dual = u;
  return rep;
}

AdmmTemplate admm_l1_template(const SmootherProblem& p, double tau) {
  check_problem(p);
  detail::require_quadratic_J(p, "admm");
  if (!is_unconstrained(p.constraints))
    throw Error(ErrorCode::UnsupportedConstraint, "ADMM-l1 handles unconstrained problems; use the split variant");
  const StackedSystem& sys = p.sys;
  const double gamma = p.gamma;
  auto solver = std::make_shared<detail::LinearSolve>(assemble_weighted(sys, tau, gamma, 0.0), sys.equalities);
  const Vec Wy = apply_Wr(sys, sys.y);
  const Vec prior = gamma * apply_At(sys, apply_Wq(sys, apply_Wq(sys, sys.z)));

  AdmmTemplate tpl;
  tpl.x_dim = sys.state_dim();
  tpl.w_dim = sys.meas_dim();
  tpl.c = Wy;
  tpl.K1 = [&sys](const Vec& x) { return apply_Wr(sys, apply_C(sys, x)); };
  tpl.K2 = [](const Vec& w) { return w; };
  tpl.K1tK2 = [&sys](const Vec& dw) { return apply_Ct(sys, apply_Wr(sys, dw)); };
  tpl.x_update = [&sys, solver, prior, Wy, tau](const Vec& w, const Vec& u) {
    const Vec rhs = prior + tau * apply_Ct(sys, apply_Wr(sys, Vec(Wy - w - u / tau)));
    return solver->solve(rhs);
  };
  tpl.w_update = [&p, tau](const Vec& x, const Vec& u) {
    return prox(p.V, 1.0 / tau, Vec(measurement_residual(p.sys, x) - u / tau), p.sys.m);
  };
  tpl.objective = [&p](const Vec& x, const Vec&) { return objective(p, x); };
  return tpl;
}

SolverReport solve_admm_l1(const SmootherProblem& p, const AdmmOptions& opt) {
  return solve_admm_general(admm_l1_template(p, opt.tau), opt);
}

SolverReport solve_admm_split(const SmootherProblem& p, const AdmmOptions& opt) {
  check_problem(p);
  detail::require_quadratic_J(p, "admm");
  if (std::holds_alternative<Polyhedral>(p.constraints))
    throw Error(ErrorCode::UnsupportedConstraint, "ADMM needs a projectable constraint set; use ip for polyhedra");
  const StackedSystem& sys = p.sys;
  const double tau = opt.tau, gamma = p.gamma;
  const Eigen::Index nm = sys.meas_dim(), nx = sys.state_dim();
  auto solver = std::make_shared<detail::LinearSolve>(assemble_weighted(sys, tau, gamma, tau), sys.equalities);
  const Vec Wy = apply_Wr(sys, sys.y);
  const Vec prior = gamma * apply_At(sys, apply_Wq(sys, apply_Wq(sys, sys.z)));

  // ω = (ω₁, ω₂):  ω₁ + WrC x = Wr y,  ω₂ − x = 0.
  AdmmTemplate tpl;
  tpl.x_dim = nx;
  tpl.w_dim = nm + nx;
  tpl.c = Vec::Zero(nm + nx);
  tpl.c.head(nm) = Wy;
  tpl.K1 = [&sys, nm, nx](const Vec& x) {
    Vec out(nm + nx);
    out.head(nm) = apply_Wr(sys, apply_C(sys, x));
    out.tail(nx) = -x;
    return out;
  };
  tpl.K2 = [](const Vec& w) { return w; };
  tpl.K1tK2 = [&sys, nm, nx](const Vec& dw) {
    return Vec(apply_Ct(sys, apply_Wr(sys, dw.head(nm))) - dw.tail(nx));
  };
  tpl.x_update = [&sys, solver, prior, Wy, tau, nm, nx](const Vec& w, const Vec& u) {
    const Vec rhs = prior + tau * apply_Ct(sys, apply_Wr(sys, Vec(Wy - w.head(nm) - u.head(nm) / tau))) +
                    tau * (w.tail(nx) + u.tail(nx) / tau);
    return solver->solve(rhs);
  };
  tpl.w_update = [&p, tau, nm, nx](const Vec& x, const Vec& u) {
    Vec out(nm + nx);
    out.head(nm) = prox(p.V, 1.0 / tau, Vec(measurement_residual(p.sys, x) - u.head(nm) / tau), p.sys.m);
    out.tail(nx) = project(p.constraints, Vec(x - u.tail(nx) / tau));
    return out;
  };
  tpl.objective = [&p](const Vec& x, const Vec&) { return objective(p, x); };
  return solve_admm_general(tpl, opt);
}

}  // namespace gks
