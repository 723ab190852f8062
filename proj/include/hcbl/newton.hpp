#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcbl/tridiagonal.hpp"

namespace hcbl {

/// Anything the corrector can solve: residual and banded Jacobians of
/// H(X; lambda), a domain predicate for the saturation band, and a starting
/// guess for the curve.
template <typename P>
concept continuation_system = requires(const P& p, std::span<const double> x, double lambda,
                                       std::span<double> out, TriDiagonal& jac) {
  { p.size() } -> std::convertible_to<std::size_t>;
  p.residual(x, lambda, out);
  p.jacobian_x(x, lambda, jac);
  p.jacobian_lambda(x, lambda, out);
  { p.in_domain(x) } -> std::convertible_to<bool>;
  { p.initial_guess() } -> std::convertible_to<std::vector<double>>;
};

struct NewtonConfig {
  double tol_abs = 1e-9;
  double tol_step = 1e-10;
  int max_iter = 25;
  double diverge_factor = 1e4;

  void validate() const {
    if (!(tol_abs > 0.0)) throw std::invalid_argument("tol_abs must be > 0");
    if (!(tol_step >= 0.0)) throw std::invalid_argument("tol_step must be >= 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(diverge_factor > 1.0)) throw std::invalid_argument("diverge_factor must be > 1");
  }
};

enum class NewtonVerdict { converged, max_iter, diverged_growth, domain_escape };

inline const char* to_string(NewtonVerdict v) {
  switch (v) {
    case NewtonVerdict::converged: return "converged";
    case NewtonVerdict::max_iter: return "max_iter";
    case NewtonVerdict::diverged_growth: return "diverged_growth";
    case NewtonVerdict::domain_escape: return "domain_escape";
  }
  return "?";
}

/// Outcome of one Newton run. residual_history holds the inf-norm after
/// each evaluated residual, so its length is iterations + 1; an update that
/// left the evaluation band (domain_escape) or a singular Jacobian is not
/// counted as an iteration.
struct NewtonReport {
  NewtonVerdict verdict = NewtonVerdict::max_iter;
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> x_final;

  bool converged() const { return verdict == NewtonVerdict::converged; }
};

namespace detail {
inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace detail

/// Full-step Newton on H(. ; lambda) = 0. No damping or line search: the
/// raw convergence behavior is the quantity of interest here. A singular
/// Jacobian is reported through the verdict (diverged_growth), not thrown.
template <continuation_system P>
NewtonReport newton_solve(const P& problem, double lambda, std::span<const double> x0,
                          const NewtonConfig& cfg) {
  cfg.validate();
  const std::size_t n = problem.size();
  if (x0.size() != n) throw std::invalid_argument("newton_solve: x0 dimension mismatch");

  NewtonReport rep;
  rep.x_final.assign(x0.begin(), x0.end());
  if (!problem.in_domain(rep.x_final)) {
    rep.verdict = NewtonVerdict::domain_escape;
    return rep;
  }

  std::vector<double> r(n);
  problem.residual(rep.x_final, lambda, r);
  double norm = detail::inf_norm(r);
  rep.residual_history.push_back(norm);
  if (norm <= cfg.tol_abs) {
    rep.verdict = NewtonVerdict::converged;
    return rep;
  }
  const double diverge_at = cfg.diverge_factor * std::max(norm, 1e-300);

  TriDiagonal jac(n);
  std::vector<double> rhs(n);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    problem.jacobian_x(rep.x_final, lambda, jac);
    for (std::size_t k = 0; k < n; ++k) rhs[k] = -r[k];
    std::vector<double> dx;
    try {
      dx = solve_tridiagonal(jac, rhs);
    } catch (const SingularMatrixError&) {
      rep.verdict = NewtonVerdict::diverged_growth;
      return rep;
    }
    for (std::size_t k = 0; k < n; ++k) rep.x_final[k] += dx[k];
    if (!problem.in_domain(rep.x_final)) {
      rep.verdict = NewtonVerdict::domain_escape;
      return rep;
    }
    problem.residual(rep.x_final, lambda, r);
    norm = detail::inf_norm(r);
    rep.residual_history.push_back(norm);
    rep.iterations = it;
    if (norm <= cfg.tol_abs) {
      rep.verdict = NewtonVerdict::converged;
      return rep;
    }
    if (norm > diverge_at) {
      rep.verdict = NewtonVerdict::diverged_growth;
      return rep;
    }
    if (detail::inf_norm(dx) <= cfg.tol_step) break;  // stalled below tol_abs
  }
  rep.verdict = NewtonVerdict::max_iter;
  return rep;
}

}  // namespace hcbl
