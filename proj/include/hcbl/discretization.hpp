#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcbl/flux.hpp"
#include "hcbl/tridiagonal.hpp"

namespace hcbl {

/// Uniform 1D cell-centered grid.
struct Grid {
  int n_cells = 1;
  double dx = 1.0;
  double length = 1.0;

  Grid() = default;
  Grid(int n, double domain_length)
      : n_cells(n), dx(domain_length / n), length(domain_length) {
    if (n < 1) throw std::invalid_argument("grid needs at least one cell");
    if (!(domain_length > 0.0)) throw std::invalid_argument("domain length must be > 0");
  }
  Grid(int n, double cell_size, double domain_length)
      : n_cells(n), dx(cell_size), length(domain_length) {
    if (n < 1) throw std::invalid_argument("grid needs at least one cell");
    if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be > 0");
    if (std::abs(n * cell_size - domain_length) > 1e-12 * std::abs(domain_length))
      throw std::invalid_argument("n_cells * dx must equal the domain length");
  }

  double cell_center(int k) const { return (k + 0.5) * dx; }
};

/// One implicit step: previous profile, step size, inflow boundary value.
struct TimeStep {
  double tau = 1.0;
  std::vector<double> s_prev;
  double s_inflow = 1.0;

  TimeStep() = default;
  TimeStep(double step_size, std::vector<double> previous, double inflow)
      : tau(step_size), s_prev(std::move(previous)), s_inflow(inflow) {
    if (!(tau > 0.0)) throw std::invalid_argument("time step must be > 0");
    if (!(s_inflow >= 0.0 && s_inflow <= 1.0))
      throw std::invalid_argument("inflow saturation must lie in [0,1]");
    for (double v : s_prev)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("previous saturations must lie in [0,1]");
  }
};

/// Sign convention of the convective difference. The printed form pairs the
/// upstream flux with a plus sign; the standard upwind form is its negative
/// and is the one that propagates fronts rightward for inflow on the left.
enum class FluxSign { as_printed, upwind_standard };

/// Prefactor of the artificial diffusion stencil: tau/dx as printed, or
/// tau/dx^2 for a consistent discrete Laplacian.
enum class DiffusionScaling { as_printed, laplacian };

/// Orientation of the added term in H = F + lambda * D: as_printed adds
/// the raw stencil, which is anti-diffusive against this residual
/// convention; stabilizing subtracts it, making the auxiliary problem
/// parabolic.
enum class DiffusionSign { as_printed, stabilizing };

enum class HomotopyKind { target_only, vanishing_diffusion, linear_relperm, hull };

inline const char* to_string(HomotopyKind k) {
  switch (k) {
    case HomotopyKind::target_only: return "target_only";
    case HomotopyKind::vanishing_diffusion: return "vanishing_diffusion";
    case HomotopyKind::linear_relperm: return "linear_relperm";
    case HomotopyKind::hull: return "hull";
  }
  return "?";
}

namespace detail {
inline void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch, got " +
                                std::to_string(got) + ", expected " + std::to_string(want));
}
}  // namespace detail

/// Implicit upwind residual of one time step,
///   out_k = (x_k - s_prev_k)/tau +- (f(x_k) - f(x_{k-1}))/dx,
/// with the Dirichlet ghost x_0 = s_inflow and sign per FluxSign.
inline void residual_target(const Grid& grid, const TimeStep& step, const FluxModel& flux,
                            FluxSign sign, std::span<const double> x, std::span<double> out) {
  const std::size_t n = static_cast<std::size_t>(grid.n_cells);
  detail::check_dim(x.size(), n, "residual_target x");
  detail::check_dim(out.size(), n, "residual_target out");
  detail::check_dim(step.s_prev.size(), n, "residual_target s_prev");
  const double inv_tau = 1.0 / step.tau;
  const double inv_dx = 1.0 / grid.dx;
  double f_up = flux.value(step.s_inflow);
  for (std::size_t k = 0; k < n; ++k) {
    const double f_k = flux.value(x[k]);
    const double conv = sign == FluxSign::as_printed ? (f_up - f_k) : (f_k - f_up);
    out[k] = (x[k] - step.s_prev[k]) * inv_tau + conv * inv_dx;
    f_up = f_k;
  }
}

/// Lower-bidiagonal Jacobian of residual_target.
inline void jacobian_target(const Grid& grid, const TimeStep& step, const FluxModel& flux,
                            FluxSign sign, std::span<const double> x, TriDiagonal& jac) {
  const std::size_t n = static_cast<std::size_t>(grid.n_cells);
  detail::check_dim(x.size(), n, "jacobian_target x");
  detail::check_dim(jac.size(), n, "jacobian_target jac");
  jac.set_zero();
  const double inv_tau = 1.0 / step.tau;
  const double inv_dx = 1.0 / grid.dx;
  const double sgn = sign == FluxSign::as_printed ? -1.0 : 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    jac.diag[k] = inv_tau + sgn * flux.d1(x[k]) * inv_dx;
    if (k > 0) jac.sub[k - 1] = -sgn * flux.d1(x[k - 1]) * inv_dx;
  }
}

/// Artificial diffusion term beta * (tau/dx) * (x_{k-1} - 2 x_k + x_{k+1})
/// with inflow ghost on the left and a zero-gradient ghost on the right.
inline void residual_diffusion(const Grid& grid, const TimeStep& step, double beta,
                               DiffusionScaling scaling, std::span<const double> x,
                               std::span<double> out) {
  const std::size_t n = static_cast<std::size_t>(grid.n_cells);
  detail::check_dim(x.size(), n, "residual_diffusion x");
  detail::check_dim(out.size(), n, "residual_diffusion out");
  const double coef = beta * (scaling == DiffusionScaling::as_printed
                                  ? step.tau / grid.dx
                                  : step.tau / (grid.dx * grid.dx));
  double left = step.s_inflow;
  for (std::size_t k = 0; k < n; ++k) {
    const double right = (k + 1 < n) ? x[k + 1] : x[k];
    out[k] = coef * (left - 2.0 * x[k] + right);
    left = x[k];
  }
}

inline void jacobian_diffusion(const Grid& grid, const TimeStep& step, double beta,
                               DiffusionScaling scaling, TriDiagonal& jac) {
  const std::size_t n = static_cast<std::size_t>(grid.n_cells);
  detail::check_dim(jac.size(), n, "jacobian_diffusion jac");
  jac.set_zero();
  const double coef = beta * (scaling == DiffusionScaling::as_printed
                                  ? step.tau / grid.dx
                                  : step.tau / (grid.dx * grid.dx));
  for (std::size_t k = 0; k < n; ++k) {
    jac.diag[k] = -2.0 * coef;
    if (k > 0) jac.sub[k - 1] = coef;
    if (k + 1 < n) jac.sup[k] = coef;
  }
  if (n > 0) jac.diag[n - 1] += coef;  // zero-gradient outflow ghost
}

inline constexpr double kDefaultOmega = 2e-3;

/// Largest |f'| over [0,1]: 1024-interval scan, then golden-section
/// refinement around the best sample.
inline double max_abs_d1(const FluxModel& flux) {
  constexpr int n_scan = 1024;
  double best = 0.0;
  double best_s = 0.0;
  for (int j = 0; j <= n_scan; ++j) {
    const double s = static_cast<double>(j) / n_scan;
    const double v = std::abs(flux.d1(s));
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  double a = std::max(0.0, best_s - 1.0 / n_scan);
  double b = std::min(1.0, best_s + 1.0 / n_scan);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = std::abs(flux.d1(x1));
  double f2 = std::abs(flux.d1(x2));
  while (b - a > 1e-12) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = std::abs(flux.d1(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = std::abs(flux.d1(x1));
    }
  }
  return std::max({best, f1, f2});
}

/// beta = omega * max |f'(S)| over the unit interval.
inline double calibrate_beta(const FluxModel& flux, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be > 0");
  return omega * max_abs_d1(flux);
}

/// One implicit time step embedded in a homotopy H(X; lambda).
///
/// target_only:          H = F,              dH/dlambda = 0
/// vanishing_diffusion:  H = F + lambda D,   dH/dlambda = D
/// linear_relperm, hull: H = lambda G + (1 - lambda) F,
///                       dH/dlambda = G - F
///
/// At lambda = 0 (and lambda = 1 for the convex combinations) the endpoint
/// residual is computed directly, so the endpoint identities hold bitwise.
struct ProblemOptions {
  FluxSign flux_sign = FluxSign::upwind_standard;
  DiffusionScaling diffusion_scaling = DiffusionScaling::as_printed;
  DiffusionSign diffusion_sign = DiffusionSign::stabilizing;
};

class HomotopyProblem {
 public:
  using Options = ProblemOptions;

  static HomotopyProblem target_only(CoreyFlux target, Grid grid, TimeStep step,
                                     Options opt = {}) {
    return HomotopyProblem(HomotopyKind::target_only, std::move(target), std::nullopt, 0.0,
                           std::move(grid), std::move(step), opt);
  }

  static HomotopyProblem vanishing_diffusion(CoreyFlux target, double beta, Grid grid,
                                             TimeStep step, Options opt = {}) {
    return HomotopyProblem(HomotopyKind::vanishing_diffusion, std::move(target), std::nullopt,
                           beta, std::move(grid), std::move(step), opt);
  }

  static HomotopyProblem linear_relperm(CoreyFlux target, Grid grid, TimeStep step,
                                        Options opt = {}) {
    FluxModel aux(linearized_flux(target));
    return HomotopyProblem(HomotopyKind::linear_relperm, std::move(target), std::move(aux), 0.0,
                           std::move(grid), std::move(step), opt);
  }

  static HomotopyProblem hull(CoreyFlux target, HullFlux aux, Grid grid, TimeStep step,
                              Options opt = {}) {
    return HomotopyProblem(HomotopyKind::hull, std::move(target), FluxModel(std::move(aux)), 0.0,
                           std::move(grid), std::move(step), opt);
  }

  std::size_t size() const { return static_cast<std::size_t>(grid_.n_cells); }

  void residual(std::span<const double> x, double lambda, std::span<double> out) const {
    check_lambda(lambda);
    switch (kind_) {
      case HomotopyKind::target_only:
        residual_target(grid_, step_, target_, opt_.flux_sign, x, out);
        return;
      case HomotopyKind::vanishing_diffusion: {
        residual_target(grid_, step_, target_, opt_.flux_sign, x, out);
        if (lambda != 0.0) {
          std::vector<double> d(out.size());
          residual_diffusion(grid_, step_, beta_, opt_.diffusion_scaling, x, d);
          const double sgn = diffusion_sign_factor();
          for (std::size_t k = 0; k < out.size(); ++k) out[k] += sgn * lambda * d[k];
        }
        return;
      }
      default: {
        if (lambda == 0.0) {
          residual_target(grid_, step_, target_, opt_.flux_sign, x, out);
          return;
        }
        if (lambda == 1.0) {
          residual_target(grid_, step_, *aux_, opt_.flux_sign, x, out);
          return;
        }
        std::vector<double> f(out.size());
        residual_target(grid_, step_, target_, opt_.flux_sign, x, f);
        residual_target(grid_, step_, *aux_, opt_.flux_sign, x, out);
        for (std::size_t k = 0; k < out.size(); ++k)
          out[k] = lambda * out[k] + (1.0 - lambda) * f[k];
        return;
      }
    }
  }

  void jacobian_x(std::span<const double> x, double lambda, TriDiagonal& jac) const {
    check_lambda(lambda);
    switch (kind_) {
      case HomotopyKind::target_only:
        jacobian_target(grid_, step_, target_, opt_.flux_sign, x, jac);
        return;
      case HomotopyKind::vanishing_diffusion: {
        jacobian_target(grid_, step_, target_, opt_.flux_sign, x, jac);
        if (lambda != 0.0) {
          TriDiagonal d(jac.size());
          jacobian_diffusion(grid_, step_, beta_, opt_.diffusion_scaling, d);
          jac.axpy(diffusion_sign_factor() * lambda, d);
        }
        return;
      }
      default: {
        if (lambda == 0.0) {
          jacobian_target(grid_, step_, target_, opt_.flux_sign, x, jac);
          return;
        }
        if (lambda == 1.0) {
          jacobian_target(grid_, step_, *aux_, opt_.flux_sign, x, jac);
          return;
        }
        TriDiagonal f(jac.size());
        jacobian_target(grid_, step_, target_, opt_.flux_sign, x, f);
        jacobian_target(grid_, step_, *aux_, opt_.flux_sign, x, jac);
        for (std::size_t k = 0; k < jac.diag.size(); ++k)
          jac.diag[k] = lambda * jac.diag[k] + (1.0 - lambda) * f.diag[k];
        for (std::size_t k = 0; k < jac.sub.size(); ++k)
          jac.sub[k] = lambda * jac.sub[k] + (1.0 - lambda) * f.sub[k];
        return;
      }
    }
  }

  void jacobian_lambda(std::span<const double> x, double lambda, std::span<double> out) const {
    check_lambda(lambda);
    switch (kind_) {
      case HomotopyKind::target_only:
        std::fill(out.begin(), out.end(), 0.0);
        return;
      case HomotopyKind::vanishing_diffusion: {
        residual_diffusion(grid_, step_, beta_, opt_.diffusion_scaling, x, out);
        const double sgn = diffusion_sign_factor();
        if (sgn != 1.0)
          for (double& v : out) v *= sgn;
        return;
      }
      default: {
        std::vector<double> f(out.size());
        residual_target(grid_, step_, target_, opt_.flux_sign, x, f);
        residual_target(grid_, step_, *aux_, opt_.flux_sign, x, out);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] -= f[k];
        return;
      }
    }
  }

  bool in_domain(std::span<const double> x) const {
    for (double v : x)
      if (!(v >= kSaturationBandLo && v <= kSaturationBandHi)) return false;
    return true;
  }

  std::vector<double> initial_guess() const { return step_.s_prev; }

  HomotopyProblem with_step(TimeStep step) const {
    HomotopyProblem copy(*this);
    detail::check_dim(step.s_prev.size(), copy.size(), "with_step s_prev");
    copy.step_ = std::move(step);
    return copy;
  }

  HomotopyKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  const TimeStep& step() const { return step_; }
  double beta() const { return beta_; }
  const FluxModel& target_flux() const { return target_; }
  const FluxModel* aux_flux() const { return aux_ ? &*aux_ : nullptr; }
  const Options& options() const { return opt_; }

 private:
  HomotopyProblem(HomotopyKind kind, CoreyFlux target, std::optional<FluxModel> aux, double beta,
                  Grid grid, TimeStep step, Options opt)
      : kind_(kind),
        target_(std::move(target)),
        aux_(std::move(aux)),
        beta_(beta),
        grid_(std::move(grid)),
        step_(std::move(step)),
        opt_(opt) {
    detail::check_dim(step_.s_prev.size(), size(), "HomotopyProblem s_prev");
  }

  static void check_lambda(double lambda) {
    if (!(lambda >= -1e-12 && lambda <= 1.0 + 1e-12))
      throw std::invalid_argument("lambda " + std::to_string(lambda) + " outside [0,1]");
  }

  double diffusion_sign_factor() const {
    return opt_.diffusion_sign == DiffusionSign::as_printed ? 1.0 : -1.0;
  }

  HomotopyKind kind_;
  FluxModel target_;
  std::optional<FluxModel> aux_;
  double beta_;
  Grid grid_;
  TimeStep step_;
  Options opt_;
};

}  // namespace hcbl
