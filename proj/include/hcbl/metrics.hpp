#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hcbl/continuation.hpp"
#include "hcbl/newton.hpp"

namespace hcbl {

struct MetricsConfig {
  double ds = 0.05;
  int n_gamma = 32;
  double fd_step = 0.0;  // 0: use ds/2

  void validate() const {
    if (!(ds > 0.0)) throw std::invalid_argument("metrics ds must be > 0");
    if (n_gamma < 8) throw std::invalid_argument("n_gamma must be >= 8");
    if (!(fd_step >= 0.0)) throw std::invalid_argument("fd_step must be >= 0");
  }

  double resolved_fd_step() const { return fd_step > 0.0 ? fd_step : 0.5 * ds; }
};

/// Traceability measures at one arclength sample.
struct MetricsRecord {
  double s = 0.0;
  double lambda = 0.0;
  double kappa = std::numeric_limits<double>::quiet_NaN();  // NaN: undefined at this sample
  double r = 0.0;
  double r_tilde = 0.0;
  double gamma_max = 0.0;
  std::optional<double> samples_failed_at;
  int corrector_iters = 0;
  double err_scale = std::numeric_limits<double>::quiet_NaN();  // s_tot^2 * kappa
};

/// Total curvature |dq'/ds| at a curve point, from central differences of
/// the unit tangent: the tracer is stepped +-fd_step along the tangent and
/// corrected at the frozen offset lambda. Returns NaN when either offset
/// corrector fails (curvature undefined at this sample).
template <continuation_system P>
double curvature(const P& problem, const CurvePoint& point, double fd_step,
                 const NewtonConfig& newton_cfg = {}) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
  const std::size_t n = problem.size();

  auto offset_tangent = [&](double dir) -> std::optional<std::vector<double>> {
    const double lam = point.lambda + dir * fd_step * point.tangent_lambda();
    std::vector<double> x_pred(n);
    for (std::size_t k = 0; k < n; ++k) x_pred[k] = point.x[k] + dir * fd_step * point.tangent[k];
    try {
      NewtonReport rep = newton_solve(problem, lam, x_pred, newton_cfg);
      if (!rep.converged()) return std::nullopt;
      return compute_tangent(problem, rep.x_final, lam, &point.tangent);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };

  const auto fwd = offset_tangent(+1.0);
  if (!fwd) return std::numeric_limits<double>::quiet_NaN();
  const auto bwd = offset_tangent(-1.0);
  if (!bwd) return std::numeric_limits<double>::quiet_NaN();

  double acc = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double d = (*fwd)[k] - (*bwd)[k];
    acc += d * d;
  }
  return std::sqrt(acc) / (2.0 * fd_step);
}

struct PredictorRadius {
  double r = 0.0;
  double r_tilde = 0.0;
  double gamma_max = 0.0;
  std::optional<double> first_failure;
};

/// Longest admissible predictor step from a curve point: gamma_max is the
/// tangent length at which the predicted lambda reaches 0 (clamped there
/// exactly); the corrector is run from every grid point gamma_max * j/n and
/// r is the largest gamma whose whole prefix converged. r_tilde = 1 means
/// the target problem is reachable in a single predictor step.
template <continuation_system P>
PredictorRadius predictor_radius(const P& problem, const CurvePoint& point,
                                 const NewtonConfig& newton_cfg, int n_gamma) {
  if (n_gamma < 1) throw std::invalid_argument("n_gamma must be >= 1");
  const double t_lam = point.tangent_lambda();
  if (!(point.lambda > 0.0) || !(std::abs(t_lam) > 0.0))
    throw std::invalid_argument("predictor_radius needs lambda > 0 and a nonzero tangent slope");

  const std::size_t n = problem.size();
  PredictorRadius out;
  out.gamma_max = point.lambda / std::abs(t_lam);

  int prefix = 0;
  for (int j = 1; j <= n_gamma; ++j) {
    const double gamma = out.gamma_max * static_cast<double>(j) / n_gamma;
    double lam = (j == n_gamma) ? 0.0 : point.lambda + gamma * t_lam;
    if (lam < 0.0) lam = 0.0;
    std::vector<double> x_pred(n);
    for (std::size_t k = 0; k < n; ++k) x_pred[k] = point.x[k] + gamma * point.tangent[k];
    const NewtonReport rep = newton_solve(problem, lam, x_pred, newton_cfg);
    if (rep.converged()) {
      prefix = j;
    } else {
      out.first_failure = gamma;
      break;
    }
  }
  out.r = out.gamma_max * static_cast<double>(prefix) / n_gamma;
  out.r_tilde = out.r * std::abs(t_lam) / point.lambda;
  return out;
}

/// Metrics at every interior point of an arclength-stepped trace (the two
/// endpoints lack the central-difference support). Failed curvature offsets
/// propagate as NaN records.
template <continuation_system P>
std::vector<MetricsRecord> sweep_metrics(const P& problem, std::span<const CurvePoint> points,
                                         const MetricsConfig& cfg, const NewtonConfig& newton_cfg) {
  cfg.validate();
  std::vector<MetricsRecord> records;
  if (points.size() < 3) return records;
  const double s_tot = points.back().arclength;
  const double fd = cfg.resolved_fd_step();

  records.reserve(points.size() - 2);
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const CurvePoint& pt = points[i];
    MetricsRecord rec;
    rec.s = pt.arclength;
    rec.lambda = pt.lambda;
    rec.corrector_iters = pt.corrector_iters;
    rec.kappa = curvature(problem, pt, fd, newton_cfg);
    rec.err_scale = s_tot * s_tot * rec.kappa;
    const PredictorRadius pr = predictor_radius(problem, pt, newton_cfg, cfg.n_gamma);
    rec.r = pr.r;
    rec.r_tilde = pr.r_tilde;
    rec.gamma_max = pr.gamma_max;
    rec.samples_failed_at = pr.first_failure;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace hcbl
