#pragma once

#include "gks/blocktridiag.hpp"
#include "gks/plq.hpp"
#include "gks/statespace.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gks {

/// min_x  Σ V(Wr(y − Cx)) + γ Σ J(Wq(z − Ax))  subject to x ∈ constraints
/// (and the nullspace equality rows carried by sys). Quadratic terms carry ½.
struct SmootherProblem {
  StackedSystem sys;
  ScalarLoss V = Quadratic{};
  ScalarLoss J = Quadratic{};
  double gamma = 1.0;
  ConstraintSet constraints = Unconstrained{};
};

/// Throws InvalidArgument for γ ≤ 0, bad loss parameters or mismatched
/// constraint sizes.
void check_problem(const SmootherProblem& p);

double objective(const SmootherProblem& p, const Vec& x);
/// Gradient of the (smooth) objective; NonSmoothLoss unless V, J ∈ {Quadratic, Huber}.
Vec grad_smooth(const SmootherProblem& p, const Vec& x);
/// 1.05× the power-iteration estimate of λ_max(CᵀR⁻¹C + γAᵀQ⁻¹A).
double lipschitz_bound(const SmootherProblem& p);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double wall_time = 0.0;  ///< seconds since the solver started
};

enum class Termination { Converged, MaxIterations };

const char* to_string(Termination t);

struct SolverReport {
  Vec x;
  Vec aux;   ///< ADMM split variable ω
  Vec dual;  ///< ADMM scaled multiplier u, CP dual ω
  std::vector<IterationRecord> records;
  Termination reason = Termination::MaxIterations;
  int iterations = 0;
  double best_objective = kInf;
};

enum class StepRule {
  Harmonic,    ///< α_κ = c/κ
  Constant,    ///< α_κ = c
  Normalized,  ///< α_κ = Δ/(L√K) with K = max_iters
};

struct SubgradientOptions {
  int max_iters = 10000;
  StepRule rule = StepRule::Harmonic;
  double c = 1.0;
  double delta = 1.0;      ///< bound on ‖x¹ − x*‖ for the Normalized rule
  double lipschitz = 1.0;  ///< bound on subgradient norms for the Normalized rule
};

/// Projected subgradient descent from x¹ = 0. report.x is the best iterate.
SolverReport solve_subgradient(const SmootherProblem& p, const SubgradientOptions& opt = {});

/// Full subgradient of the objective at x (ignores constraints).
Vec objective_subgradient(const SmootherProblem& p, const Vec& x);

struct ProxGradOptions {
  double eps = 1e-8;
  int max_iters = 10000;
  int restart_every = 0;  ///< FISTA only: reset momentum every k iterations (0 = never)
};

/// Projected gradient with step 1/β; stops on ‖x − prox(x − ∇f/β)‖ ≤ eps.
SolverReport solve_prox_grad(const SmootherProblem& p, const ProxGradOptions& opt = {});
SolverReport solve_fista(const SmootherProblem& p, const ProxGradOptions& opt = {});

/// FISTA momentum sequence s_κ = (1 + √(1 + 4 s_{κ−1}²)) / 2.
double fista_next_s(double s);

/// Two-block template  min f(x) + g(ω)  s.t.  K1 x + K2 ω = c.
/// x_update(ω, u) = argmin_x f(x) + τ/2‖K1x + K2ω − c + u/τ‖²
/// w_update(x, u) = argmin_ω g(ω) + τ/2‖K1x + K2ω − c + u/τ‖²
struct AdmmTemplate {
  std::size_t x_dim = 0, w_dim = 0;
  std::function<Vec(const Vec& w, const Vec& u)> x_update;
  std::function<Vec(const Vec& x, const Vec& u)> w_update;
  std::function<Vec(const Vec&)> K1, K2;
  /// K1ᵀK2 applied to a vector in ω-space (for the dual residual).
  std::function<Vec(const Vec&)> K1tK2;
  Vec c;
  std::function<double(const Vec& x, const Vec& w)> objective;  ///< optional, for records
};

struct AdmmOptions {
  double tau = 1.0;
  double eps = 1e-8;
  int max_iters = 100000;
};

/// Stops when ‖K1x + K2ω − c‖ ≤ eps and ‖τK1ᵀK2(ω⁺ − ω)‖ ≤ eps.
/// Starts from x¹ = ω¹ = u¹ = 0.
SolverReport solve_admm_general(const AdmmTemplate& tpl, const AdmmOptions& opt = {});

/// ℓ₁-Kalman ADMM: split ω = Wr(y − Cx), factor γAᵀQ⁻¹A + τCᵀR⁻¹C once.
/// Requires J Quadratic and no constraint set; V may be any loss with a prox.
/// Nullspace equality rows in sys are enforced exactly in the x-update.
SolverReport solve_admm_l1(const SmootherProblem& p, const AdmmOptions& opt = {});

/// Constrained variant through the general template: ω = (Wr(y − Cx), x),
/// g(ω) = V(ω₁) + ι_X(ω₂). Requires J Quadratic.
SolverReport solve_admm_split(const SmootherProblem& p, const AdmmOptions& opt = {});

/// The template instance used by solve_admm_l1 (exposed for cross-checks).
AdmmTemplate admm_l1_template(const SmootherProblem& p, double tau);

enum class CpVariant { V1, V2 };

struct CpOptions {
  double sigma = 0.0;  ///< 0 means 0.99/L
  double tau = 0.0;    ///< 0 means 0.99/L
  double eps = 1e-10;
  int max_iters = 10000;
};

/// Chambolle–Pock on min f(Kx − r) + g(x):
///   ω⁺ = prox_{σf*}(ω + σ(K(2x − x⁻) − r)),  x⁺ = prox_{τg}(x − τKᵀω⁺).
/// V1: K = [WrC; WqA], f = V + γJ, g = ι_X.
/// V2: K = [WrC; I],  f = V + ι_X, g = γ½‖Wq(Ax − z)‖² (J must be Quadratic).
/// Records carry the objective at the projection of x onto X.
/// Throws StepSizeViolation if στL² ≥ 1.
SolverReport solve_cp(const SmootherProblem& p, CpVariant variant, const CpOptions& opt = {});

/// Operator norm bound L (square root of the inflated λ_max(KᵀK)).
double cp_operator_norm(const SmootherProblem& p, CpVariant variant);

/// prox_{τg} of the V2 splitting: (τγAᵀQ⁻¹A + I)⁻¹(y + τγAᵀQ⁻¹z).
Vec cp_v2_prox_g(const SmootherProblem& p, double tau, const Vec& y);

}  // namespace gks
