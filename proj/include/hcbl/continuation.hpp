#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcbl/newton.hpp"
#include "hcbl/tridiagonal.hpp"

namespace hcbl {

/// Singular dH/dX while solving for the curve tangent: lambda cannot
/// parametrize the curve locally.
class FoldPointError : public std::runtime_error {
 public:
  explicit FoldPointError(const std::string& what) : std::runtime_error(what) {}
};

class AuxiliarySolveError : public std::runtime_error {
 public:
  explicit AuxiliarySolveError(const std::string& what) : std::runtime_error(what) {}
};

/// Accepted point on the homotopy curve. tangent has size n+1 (X components
/// then lambda), unit 2-norm, oriented toward decreasing lambda.
struct CurvePoint {
  std::vector<double> x;
  double lambda = 1.0;
  std::vector<double> tangent;
  double arclength = 0.0;
  int corrector_iters = 0;

  double tangent_lambda() const { return tangent.back(); }
};

enum class TraceMode { lambda_stepping, arclength_stepping };

struct TraceConfig {
  double dlambda_init = 0.25;
  double dlambda_min = 1e-4;
  double dlambda_max = 1.0;
  double grow = 1.5;
  double shrink = 0.5;
  NewtonConfig newton{};
  TraceMode mode = TraceMode::lambda_stepping;
  double ds = 0.05;
  long max_points = 100000;

  void validate() const {
    if (!(dlambda_min > 0.0 && dlambda_min <= dlambda_init && dlambda_init <= dlambda_max &&
          dlambda_max <= 1.0))
      throw std::invalid_argument("require 0 < dlambda_min <= dlambda_init <= dlambda_max <= 1");
    if (!(grow >= 1.0)) throw std::invalid_argument("grow factor must be >= 1");
    if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must be in (0,1)");
    if (!(ds > 0.0)) throw std::invalid_argument("ds must be > 0");
    if (max_points < 2) throw std::invalid_argument("max_points must be >= 2");
    newton.validate();
  }
};

enum class TraceStatus { success, auxiliary_failure, fold_point, step_underflow, step_limit };

inline const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::success: return "success";
    case TraceStatus::auxiliary_failure: return "auxiliary_failure";
    case TraceStatus::fold_point: return "fold_point";
    case TraceStatus::step_underflow: return "step_underflow";
    case TraceStatus::step_limit: return "step_limit";
  }
  return "?";
}

/// Curve with status. On failure, points holds everything accepted up to
/// the last good point.
struct TraceResult {
  TraceStatus status = TraceStatus::success;
  std::vector<CurvePoint> points;
  std::string detail;

  bool ok() const { return status == TraceStatus::success; }
};

/// Solves (dH/dX) t_x = -(dH/dlambda) and returns the normalized tangent
/// (t_x, 1)/|.|, flipped so that dot(tangent, prev) > 0, or (without a
/// previous tangent) so that the lambda component is negative.
template <continuation_system P>
std::vector<double> compute_tangent(const P& problem, std::span<const double> x, double lambda,
                                    const std::vector<double>* prev = nullptr) {
  const std::size_t n = problem.size();
  TriDiagonal jac(n);
  problem.jacobian_x(x, lambda, jac);
  std::vector<double> rhs(n);
  problem.jacobian_lambda(x, lambda, rhs);
  for (double& v : rhs) v = -v;
  std::vector<double> t_x;
  try {
    t_x = solve_tridiagonal(jac, rhs);
  } catch (const SingularMatrixError& e) {
    throw FoldPointError("singular Jacobian at lambda=" + std::to_string(lambda) + ": " +
                         e.what());
  }
  double nrm2 = 1.0;
  for (double v : t_x) nrm2 += v * v;
  const double nrm = std::sqrt(nrm2);
  std::vector<double> tangent(n + 1);
  for (std::size_t k = 0; k < n; ++k) tangent[k] = t_x[k] / nrm;
  tangent[n] = 1.0 / nrm;

  bool flip = false;
  if (prev != nullptr) {
    double dot = 0.0;
    for (std::size_t k = 0; k <= n; ++k) dot += tangent[k] * (*prev)[k];
    flip = dot < 0.0;
  } else {
    flip = tangent[n] > 0.0;
  }
  if (flip)
    for (double& v : tangent) v = -v;
  return tangent;
}

/// Newton solve of the auxiliary problem H(X; 1) = 0 from the previous time
/// step's profile; returns the curve start. Throws AuxiliarySolveError when
/// the corrector does not converge (a badly chosen auxiliary problem) and
/// FoldPointError when the start point has a singular Jacobian.
template <continuation_system P>
CurvePoint solve_auxiliary(const P& problem, const NewtonConfig& cfg) {
  const std::vector<double> x0 = problem.initial_guess();
  NewtonReport rep = newton_solve(problem, 1.0, x0, cfg);
  if (!rep.converged())
    throw AuxiliarySolveError(std::string("auxiliary solve at lambda=1 failed: ") +
                              to_string(rep.verdict) + " after " +
                              std::to_string(rep.iterations) + " iterations");
  CurvePoint pt;
  pt.x = rep.x_final;
  pt.lambda = 1.0;
  pt.tangent = compute_tangent(problem, pt.x, 1.0);
  pt.arclength = 0.0;
  pt.corrector_iters = rep.iterations;
  return pt;
}

namespace detail {

inline double chord_length(const CurvePoint& a, std::span<const double> x_new, double lambda_new) {
  double acc = (lambda_new - a.lambda) * (lambda_new - a.lambda);
  for (std::size_t k = 0; k < x_new.size(); ++k) {
    const double d = x_new[k] - a.x[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace detail

/// Predictor-corrector tracing of the homotopy curve from lambda = 1 down
/// to lambda = 0. Euler prediction along the tangent, Newton correction at
/// the frozen predicted lambda. In lambda_stepping mode the step adapts
/// (shrink on corrector failure, grow after cheap successes); in
/// arclength_stepping mode the nominal predictor length stays ds to give
/// uniformly spaced samples for the traceability metrics.
template <continuation_system P>
TraceResult trace(const P& problem, const TraceConfig& cfg) {
  cfg.validate();
  TraceResult result;

  try {
    result.points.push_back(solve_auxiliary(problem, cfg.newton));
  } catch (const AuxiliarySolveError& e) {
    result.status = TraceStatus::auxiliary_failure;
    result.detail = e.what();
    return result;
  } catch (const FoldPointError& e) {
    result.status = TraceStatus::fold_point;
    result.detail = e.what();
    return result;
  }

  const bool lambda_mode = cfg.mode == TraceMode::lambda_stepping;
  double dlambda = cfg.dlambda_init;
  double ds_try = cfg.ds;
  constexpr int kGrowIterThreshold = 5;

  while (result.points.back().lambda > 0.0) {
    if (static_cast<long>(result.points.size()) >= cfg.max_points) {
      result.status = TraceStatus::step_limit;
      result.detail = "accepted point limit reached";
      return result;
    }
    const CurvePoint& cur = result.points.back();
    const double t_lam = cur.tangent_lambda();
    if (!(std::abs(t_lam) >= 1e-12)) {
      result.status = TraceStatus::fold_point;
      result.detail = "tangent lambda component vanished at lambda=" + std::to_string(cur.lambda);
      return result;
    }

    double h;           // predictor length along the tangent
    double lambda_new;  // frozen corrector lambda
    if (lambda_mode) {
      const double step_lam = std::min(dlambda, cur.lambda);
      lambda_new = (step_lam == cur.lambda) ? 0.0 : cur.lambda - step_lam;
      h = step_lam / std::abs(t_lam);
    } else {
      const double to_zero = cur.lambda / std::abs(t_lam);
      if (ds_try >= to_zero) {
        h = to_zero;
        lambda_new = 0.0;
      } else {
        h = ds_try;
        lambda_new = cur.lambda + h * t_lam;
      }
    }

    std::vector<double> x_pred(cur.x.size());
    for (std::size_t k = 0; k < x_pred.size(); ++k) x_pred[k] = cur.x[k] + h * cur.tangent[k];

    NewtonReport rep = newton_solve(problem, lambda_new, x_pred, cfg.newton);
    if (rep.converged()) {
      std::vector<double> tangent;
      try {
        tangent = compute_tangent(problem, rep.x_final, lambda_new, &cur.tangent);
      } catch (const FoldPointError& e) {
        result.status = TraceStatus::fold_point;
        result.detail = e.what();
        return result;
      }
      if (tangent.back() > 0.0) {
        result.status = TraceStatus::fold_point;
        result.detail = "tangent turned toward increasing lambda at lambda=" +
                        std::to_string(lambda_new);
        return result;
      }
      CurvePoint next;
      next.arclength = cur.arclength + detail::chord_length(cur, rep.x_final, lambda_new);
      next.x = std::move(rep.x_final);
      next.lambda = lambda_new;
      next.tangent = std::move(tangent);
      next.corrector_iters = rep.iterations;
      result.points.push_back(std::move(next));
      if (lambda_mode) {
        if (rep.iterations <= kGrowIterThreshold)
          dlambda = std::min(dlambda * cfg.grow, cfg.dlambda_max);
      } else {
        ds_try = cfg.ds;
      }
    } else {
      if (lambda_mode) {
        if (dlambda <= cfg.dlambda_min * (1.0 + 1e-12)) {
          result.status = TraceStatus::step_underflow;
          result.detail = std::string("corrector kept failing (") + to_string(rep.verdict) +
                          ") at dlambda_min near lambda=" + std::to_string(cur.lambda);
          return result;
        }
        dlambda = std::max(dlambda * cfg.shrink, cfg.dlambda_min);
      } else {
        if (ds_try <= cfg.ds * 1e-3) {
          result.status = TraceStatus::step_underflow;
          result.detail = std::string("corrector kept failing (") + to_string(rep.verdict) +
                          ") at minimal arclength step near lambda=" + std::to_string(cur.lambda);
          return result;
        }
        ds_try *= cfg.shrink;
      }
    }
  }
  return result;
}

}  // namespace hcbl
