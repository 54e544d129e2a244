#pragma once

#include "gks/common.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gks {

struct Quadratic {};  ///< ½x²
struct L1 {};         ///< |x|
struct Huber {        ///< ½x² for |x| ≤ κ, κ|x| − ½κ² beyond
  double kappa = 1.0;
};
struct Vapnik {  ///< max(|x| − ε, 0)
  double eps = 0.0;
};
struct HuberInsensitive {  ///< huber_κ(max(|x| − ε, 0))
  double kappa = 1.0;
  double eps = 0.0;
};
struct ElasticNet {  ///< α|x| + (1−α)½x²
  double alpha = 0.5;
};
struct GroupL2 {};  ///< ‖x_block‖₂ summed over blocks

using ScalarLoss = std::variant<Quadratic, L1, Huber, Vapnik, HuberInsensitive, ElasticNet, GroupL2>;

/// Throws Error{InvalidArgument} for out-of-range parameters.
void check_loss(const ScalarLoss& loss);

/// Parses "l2", "l1", "huber:kappa=1", "vapnik:eps=0.5",
/// "huber-ins:kappa=1,eps=0.2", "enet:alpha=0.5", "group-l2".
ScalarLoss parse_loss(std::string_view spec);
std::string loss_to_string(const ScalarLoss& loss);

bool is_smooth(const ScalarLoss& loss);  ///< Quadratic or Huber
bool is_group(const ScalarLoss& loss);

/// Scalar value. GroupL2 on a scalar is |x|.
double eval(const ScalarLoss& loss, double x);

/// Σ_i loss(r_i); for GroupL2 the sum of ‖·‖₂ over consecutive blocks of
/// length `block` (block = 0 means one block).
double eval_sum(const ScalarLoss& loss, const Vec& r, std::size_t block = 0);
/// Σ_i loss((W r)_i)
double eval_sum(const ScalarLoss& loss, const Mat& W, const Vec& r, std::size_t block = 0);

/// prox_{η·loss}(y) applied coordinate-wise (block-wise for GroupL2).
Vec prox(const ScalarLoss& loss, double eta, const Vec& y, std::size_t block = 0);
double prox_scalar(const ScalarLoss& loss, double eta, double y);

/// prox_{η f*}(y) = y − η prox_{f/η}(y/η)
Vec prox_conjugate(const ScalarLoss& loss, double eta, const Vec& y, std::size_t block = 0);

/// One element of ∂loss(x). sign(0) is taken as 0.
double subgradient(const ScalarLoss& loss, double x);
Vec subgradient(const ScalarLoss& loss, const Vec& r, std::size_t block = 0);
/// Gradient of Σ loss(r_i); throws NonSmoothLoss unless Quadratic/Huber.
Vec gradient(const ScalarLoss& loss, const Vec& r);

/// Closed interval ∂loss(x) = [first, second].
std::pair<double, double> subdifferential(const ScalarLoss& loss, double x);

/// f*(w); +∞ outside the domain.
double conjugate_eval(const ScalarLoss& loss, double w);

/// Conjugate representation ρ(x) = sup_{v ∈ V} ⟨v, b + Bx⟩ − ½vᵀMv with
/// V = {v : Hᵀv ≤ h}.
struct PlqPenalty {
  Vec b;
  Mat B;
  Mat M;
  Mat H;
  Vec h;

  std::size_t k() const { return static_cast<std::size_t>(b.size()); }
  std::size_t ell() const { return static_cast<std::size_t>(h.size()); }
};

/// Encoding of a scalar loss as a PLQ with a 1-column B. GroupL2 is not PLQ
/// (its dual set is a Euclidean ball) and throws UnsupportedLoss.
PlqPenalty plq_encoding(const ScalarLoss& loss);

/// Violations of the PlqPenalty invariants (injective B, h ≥ 0, M PSD).
std::vector<std::string> check_plq(const PlqPenalty& p);

struct Unconstrained {};
struct Box {
  Vec lo, hi;  ///< per coordinate; ±∞ allowed
};
struct Ball2 {
  double tau = 1.0;
};
struct Ball1 {
  double tau = 1.0;
};
struct BallInf {
  double tau = 1.0;
};
/// {x : Dᵀx ≤ d}; columns flagged in `equality` are Dᵀx = d rows.
struct Polyhedral {
  Mat D;
  Vec d;
  std::vector<bool> equality;
};

using ConstraintSet = std::variant<Unconstrained, Box, Ball2, Ball1, BallInf, Polyhedral>;

/// Euclidean projection. Throws NotImplemented for Polyhedral.
Vec project(const ConstraintSet& set, const Vec& y);
bool contains(const ConstraintSet& set, const Vec& x, double tol = 0.0);
bool is_unconstrained(const ConstraintSet& set);

/// Box acting on every time block: lo ≤ x_t ≤ hi for t = 0..N.
Box state_box(const Vec& lo, const Vec& hi, std::size_t N);

}  // namespace gks
