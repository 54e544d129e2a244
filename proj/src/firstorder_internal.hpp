#pragma once

#include "gks/firstorder.hpp"
#include "gks/saddle.hpp"

#include <chrono>
#include <memory>
#include <optional>

namespace gks::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Solves T x = r, or the saddle system with the nullspace rows when present.
class LinearSolve {
 public:
  LinearSolve(const BlockTridiag& T, const std::vector<LocalRow>& rows) {
    if (rows.empty()) {
      btd_ = factor(T);
    } else {
      saddle_.emplace(T, rows);
      e_.resize(rows.size());
      for (std::size_t j = 0; j < rows.size(); ++j) e_(j) = rows[j].rhs;
    }
  }
  Vec solve(const Vec& r) const { return saddle_ ? saddle_->solve(r, e_) : solve_factored(*btd_, r); }

 private:
  std::optional<BtdFactorization> btd_;
  std::optional<SaddleFactorization> saddle_;
  Vec e_;
};

inline void require_no_equalities(const SmootherProblem& p, const char* solver) {
  if (!p.sys.equalities.empty())
    throw Error(ErrorCode::UnsupportedConstraint,
                std::string(solver) + " cannot enforce the nullspace equality rows of singular covariances; "
                                      "use admm or ip");
}

inline void require_quadratic_J(const SmootherProblem& p, const char* solver) {
  if (!std::holds_alternative<Quadratic>(p.J))
    throw Error(ErrorCode::InvalidArgument, std::string(solver) + " requires a quadratic process loss");
}

}  // namespace gks::detail
