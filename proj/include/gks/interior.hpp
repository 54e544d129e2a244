#pragma once

#include "gks/firstorder.hpp"
#include "gks/plq.hpp"

#include <optional>
#include <vector>

namespace gks {

/// One scalar residual c − aᵀx penalized by scale·loss, where a is time-local
/// (stored in `row`, with row.rhs = c). Its PLQ data are
///   b = scale·(b_e + B_e c),  B = −scale·B_e aᵀ,  M = scale·M_e,  H = H_e,  h = h_e
/// with (b_e, B_e, M_e, H_e, h_e) the scalar encoding of `loss`.
struct PlqTerm {
  LocalRow row;
  ScalarLoss loss = Quadratic{};
  double scale = 1.0;
  PlqPenalty enc;
  std::size_t v_offset = 0;  ///< position of this term's duals in v
  std::size_t h_offset = 0;  ///< position of its polyhedron rows in r, w
};

/// min ρ(x)  s.t.  Dᵀx ≤ d,  Eᵀx = e  with ρ = Σ terms. Every column of D and
/// E is a time-local row over the n(N+1) stacked state.
struct ConstrainedPlqProblem {
  std::size_t n = 0, N = 0;
  std::vector<PlqTerm> terms;
  std::vector<LocalRow> inequalities;  ///< rows of Dᵀ with rhs d
  std::vector<LocalRow> equalities;    ///< rows of Eᵀ with rhs e
  Vec x0;                              ///< starting point (zero if empty)
  std::size_t k = 0;                   ///< total PLQ dual dimension
  std::size_t ell = 0;                 ///< total polyhedron rows (n₂)

  std::size_t dim() const { return n * (N + 1); }
  std::size_t n1() const { return inequalities.size(); }
  std::size_t n2() const { return ell; }
};

/// Appends a term and assigns its offsets.
void add_term(ConstrainedPlqProblem& prob, PlqTerm term);

/// Builds the PLQ form of a smoother problem. Rows of the weighted operators
/// that are identically zero (with zero data) are dropped. Box and BallInf
/// constraints become two rows per finite bound, Polyhedral columns must be
/// time-local, and the nullspace rows of sys are carried as equalities.
ConstrainedPlqProblem smoother_to_plq(const SmootherProblem& p);

/// ρ(x) evaluated through the scalar losses.
double primal_objective(const ConstrainedPlqProblem& prob, const Vec& x);

/// Dense (b, B, M, H, h) of ρ. For tests and small problems.
PlqPenalty aggregate_penalty(const ConstrainedPlqProblem& prob);

struct DenseConstraints {
  Mat D;
  Vec d;
  Mat E;
  Vec e;
};
DenseConstraints dense_constraints(const ConstrainedPlqProblem& prob);

struct KktState {
  Vec x, v, s, r, omega, w;
  Vec lambda;  ///< equality multipliers
  double mu = 0.0;
};

/// Blocks of F_μ:
///   Dω + Bᵀv + Eλ,  Mv + Hw − Bx − b,  Dᵀx − d + s,  Hᵀv − h + r,  Ωs − μ1,  Wr − μ1
/// plus Eᵀx − e.
struct KktResidual {
  Vec stationarity, plq, primal, dual, comp_s, comp_r, equality;

  double norm() const;      ///< Euclidean norm of the stacked residual
  double norm_inf() const;  ///< max-abs over all blocks
};

KktResidual kkt_residual(const ConstrainedPlqProblem& prob, const KktState& state, double mu);

/// Average complementarity (ωᵀs + wᵀr)/(n₁ + n₂), zero when there are none.
double average_complementarity(const KktState& state);

/// Interior starting point: x = x0, s = max(d − Dᵀx, 1), v = 0, r = max(h − Hᵀv, 1),
/// ω = w = 1, λ = 0 and μ the average complementarity.
KktState initial_state(const ConstrainedPlqProblem& prob);

/// Newton direction for F_μ = 0 (same layout as the state; mu unused).
KktState newton_direction(const ConstrainedPlqProblem& prob, const KktState& state, double mu);

struct NewtonStep {
  KktState direction;
  double gamma = 0.0;  ///< accepted step length
  KktState next;
};

/// Direction plus fraction-to-boundary (0.995) and backtracking on ‖F_μ‖.
/// Throws LineSearchFailure after 30 halvings without decrease.
NewtonStep newton_step(const ConstrainedPlqProblem& prob, const KktState& state, double mu);

struct IpOptions {
  double theta = 0.1;
  double eps = 1e-8;
  int max_iters = 200;
};

struct IpResult {
  Vec x;
  KktState state;
  SolverReport report;
};

/// Raised when the method stops short (iteration cap, line-search failure or a
/// singular reduced system); carries the best state seen.
class IpFailure : public Error {
 public:
  IpFailure(ErrorCode code, const std::string& what, KktState best, SolverReport report = {})
      : Error(code, what), best_(std::move(best)), report_(std::move(report)) {}
  const KktState& best() const { return best_; }
  /// Records up to the failure.
  const SolverReport& report() const { return report_; }

 private:
  KktState best_;
  SolverReport report_;
};

/// Damped Newton on F_μ with μ⁺ = θ·avg complementarity. Stops when the
/// average complementarity and ‖F_0‖∞ are both ≤ eps. Records hold ρ(x),
/// the step length, ‖F_0‖∞ and μ.
IpResult solve_ip(const ConstrainedPlqProblem& prob, const IpOptions& opt = {});
IpResult solve_ip(const SmootherProblem& p, const IpOptions& opt = {});

/// primal(x) + ⟨d,ω⟩ + ⟨e,λ⟩ + ½vᵀMv − ⟨b,v⟩. Throws DualInfeasible when
/// (v, ω, λ) violates Bᵀv + Dω + Eλ = 0, Hᵀv ≤ h or ω ≥ 0 beyond tol.
double duality_gap(const ConstrainedPlqProblem& prob, const Vec& x, const Vec& v, const Vec& omega,
                   const Vec& lambda = Vec(), double tol = 1e-6);

}  // namespace gks
