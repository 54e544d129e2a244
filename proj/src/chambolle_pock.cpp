#include "firstorder_internal.hpp"

#include <cmath>

namespace gks {

namespace {

// prox_{σ(sf)*}(q) = q − σ prox_{(s/σ) f}(q/σ)
Vec prox_scaled_conjugate(const ScalarLoss& loss, double scale, double sigma, const Vec& q, std::size_t block) {
  return q - sigma * prox(loss, scale / sigma, Vec(q / sigma), block);
}

BlockTridiag ktk(const SmootherProblem& p, CpVariant variant) {
  return variant == CpVariant::V1 ? assemble_weighted(p.sys, 1.0, 1.0, 0.0) : assemble_weighted(p.sys, 1.0, 0.0, 1.0);
}

}  // namespace

double cp_operator_norm(const SmootherProblem& p, CpVariant variant) {
  const BlockTridiag T = ktk(p, variant);
  return std::sqrt(power_iteration([&](const Vec& v) { return matvec(T, v); }, T.dim()).upper_bound);
}

Vec cp_v2_prox_g(const SmootherProblem& p, double tau, const Vec& y) {
  const BtdFactorization f = factor(assemble_weighted(p.sys, 0.0, tau * p.gamma, 1.0));
  return solve_factored(f, y + tau * p.gamma * apply_At(p.sys, apply_Wq(p.sys, apply_Wq(p.sys, p.sys.z))));
}

SolverReport solve_cp(const SmootherProblem& p, CpVariant variant, const CpOptions& opt) {
  check_problem(p);
  detail::require_no_equalities(p, "chambolle-pock");
  if (variant == CpVariant::V2) detail::require_quadratic_J(p, "cp-v2");
  if (std::holds_alternative<Polyhedral>(p.constraints))
    throw Error(ErrorCode::UnsupportedConstraint, "Chambolle-Pock needs a projectable constraint set");

  detail::Stopwatch clock;
  const StackedSystem& sys = p.sys;
  const double L = cp_operator_norm(p, variant);
  const double sigma = opt.sigma > 0.0 ? opt.sigma : 0.99 / L;
  const double tau = opt.tau > 0.0 ? opt.tau : 0.99 / L;
  if (sigma * tau * L * L >= 1.0)
    throw Error(ErrorCode::StepSizeViolation, "sigma*tau*L^2 = " + std::to_string(sigma * tau * L * L) + " >= 1");

  const Eigen::Index nm = sys.meas_dim(), nx = sys.state_dim();
  const Eigen::Index n2 = nx;  // second dual block: Wq(Ax) for V1, x for V2
  Vec r(nm + n2);
  r.head(nm) = apply_Wr(sys, sys.y);
  r.tail(n2) = variant == CpVariant::V1 ? apply_Wq(sys, sys.z) : Vec::Zero(n2);

  auto K = [&](const Vec& x) {
    Vec out(nm + n2);
    out.head(nm) = apply_Wr(sys, apply_C(sys, x));
    out.tail(n2) = variant == CpVariant::V1 ? apply_Wq(sys, apply_A(sys, x)) : x;
    return out;
  };
  auto Kt = [&](const Vec& w) {
    Vec out = apply_Ct(sys, apply_Wr(sys, w.head(nm)));
    out += variant == CpVariant::V1 ? apply_At(sys, apply_Wq(sys, w.tail(n2))) : Vec(w.tail(n2));
    return out;
  };
  auto prox_f_conj = [&](const Vec& q) {
    Vec out(nm + n2);
    out.head(nm) = prox_scaled_conjugate(p.V, 1.0, sigma, q.head(nm), sys.m);
    if (variant == CpVariant::V1)
      out.tail(n2) = prox_scaled_conjugate(p.J, p.gamma, sigma, q.tail(n2), sys.n);
    else
      out.tail(n2) = q.tail(n2) - sigma * project(p.constraints, Vec(q.tail(n2) / sigma));
    return out;
  };
  std::optional<BtdFactorization> v2_factor;
  Vec v2_shift;
  if (variant == CpVariant::V2) {
    v2_factor = factor(assemble_weighted(sys, 0.0, tau * p.gamma, 1.0));
    v2_shift = tau * p.gamma * apply_At(sys, apply_Wq(sys, apply_Wq(sys, sys.z)));
  }
  auto prox_g = [&](const Vec& v) {
    return variant == CpVariant::V1 ? project(p.constraints, v) : solve_factored(*v2_factor, v + v2_shift);
  };

  SolverReport rep;
  Vec x = Vec::Zero(nx), x_prev = x;
  Vec w = Vec::Zero(nm + n2);
  for (int k = 1; k <= opt.max_iters; ++k) {
    const Vec w_next = prox_f_conj(w + sigma * (K(2.0 * x - x_prev) - r));
    const Vec x_next = prox_g(x - tau * Kt(w_next));
    const double dx = (x_next - x).norm(), dw = (w_next - w).norm();
    x_prev = x;
    x = x_next;
    w = w_next;
    const double f = objective(p, project(p.constraints, x));
    rep.best_objective = std::min(rep.best_objective, f);
    rep.records.push_back({k, f, tau, dx, dw, clock.seconds()});
    rep.iterations = k;
    if (std::sqrt(dx * dx + dw * dw) <= opt.eps) {
      rep.reason = Termination::Converged;
      break;
    }
  }
  rep.x = x;
  rep.dual = w;
  return rep;
}

}  // namespace gks
