#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "hcbl/flux.hpp"

namespace hcbl {

struct ShockWave {
  double speed;
  double s_left;   // state on the slow (left) side
  double s_right;  // state on the fast (right) side
};

struct RarefactionWave {
  double s_left;
  double s_right;
  double speed_left;   // characteristic speed at the left edge of the fan
  double speed_right;  // at the right edge; speed_left <= speed_right
};

using Wave = std::variant<ShockWave, RarefactionWave>;

/// Self-similar entropy solution of the Riemann problem, built from the
/// concave/convex envelope of the flow function between the two states.
/// Chord pieces of the envelope become shocks (speed = chord slope, which
/// satisfies Rankine-Hugoniot by construction); arcs where the envelope
/// follows the flow function become rarefaction fans.
class RiemannSolution {
 public:
  RiemannSolution(FluxModel flux, double s_left, double s_right, std::vector<Wave> waves)
      : flux_(std::move(flux)), s_left_(s_left), s_right_(s_right), waves_(std::move(waves)) {}

  const FluxModel& flux() const { return flux_; }
  double left_state() const { return s_left_; }
  double right_state() const { return s_right_; }
  const std::vector<Wave>& waves() const { return waves_; }

  /// Profile value S(x, t) for t > 0. Rarefaction interiors invert the
  /// characteristic speed by bisection on the monotone branch of f'.
  double value(double x, double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("self-similar profile needs t > 0");
    const double xi = x / t;
    double state = s_left_;
    for (const Wave& w : waves_) {
      if (const auto* shock = std::get_if<ShockWave>(&w)) {
        if (xi < shock->speed) return state;
        state = shock->s_right;
      } else {
        const auto& fan = std::get<RarefactionWave>(w);
        if (xi < fan.speed_left) return state;
        if (xi <= fan.speed_right) return invert_speed(fan, xi);
        state = fan.s_right;
      }
    }
    return s_right_;
  }

 private:
  double invert_speed(const RarefactionWave& fan, double xi) const {
    double a = std::min(fan.s_left, fan.s_right);
    double b = std::max(fan.s_left, fan.s_right);
    double ga = flux_.d1(a) - xi;
    const double gb = flux_.d1(b) - xi;
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    if ((ga > 0.0) == (gb > 0.0)) return std::abs(ga) < std::abs(gb) ? a : b;
    while (b - a > 1e-10) {
      const double mid = 0.5 * (a + b);
      const double gm = flux_.d1(mid) - xi;
      if (gm == 0.0) return mid;
      if ((gm > 0.0) == (ga > 0.0)) {
        a = mid;
        ga = gm;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  }

  FluxModel flux_;
  double s_left_;
  double s_right_;
  std::vector<Wave> waves_;
};

/// Welge/Oleinik construction between two states: envelope of f on the
/// state interval (upper concave for s_left > s_right, lower convex
/// otherwise), traversed from the left state toward the right state.
inline RiemannSolution solve_riemann(const FluxModel& flux, double s_left, double s_right,
                                     int n_samples = 4096) {
  if (!(s_left >= 0.0 && s_left <= 1.0) || !(s_right >= 0.0 && s_right <= 1.0))
    throw std::invalid_argument("solve_riemann: states must lie in [0,1]");
  if (s_left == s_right)
    throw std::invalid_argument("solve_riemann: degenerate states, no wave direction");

  const double lo = std::min(s_left, s_right);
  const double hi = std::max(s_left, s_right);
  const HullOrientation orientation =
      s_left > s_right ? HullOrientation::concave_upper : HullOrientation::convex_lower;
  const std::vector<HullKnot> knots = build_envelope(flux, lo, hi, orientation, n_samples);

  // Traverse segments from the left state toward the right state. For
  // s_left > s_right that is from the top knot downward.
  const bool descending = s_left > s_right;
  std::vector<Wave> waves;
  const std::size_t m = knots.size();
  for (std::size_t idx = 0; idx + 1 < m; ++idx) {
    const std::size_t i = descending ? m - 2 - idx : idx;
    const HullKnot& a = knots[i];
    const HullKnot& b = knots[i + 1];
    const double entry = descending ? b.s : a.s;
    const double exit = descending ? a.s : b.s;
    if (std::abs(b.s - a.s) <= 1e-12) continue;
    if (a.linear_right) {
      const double speed = (b.f - a.f) / (b.s - a.s);
      waves.push_back(ShockWave{speed, entry, exit});
    } else {
      const double v_entry = flux.d1(entry);
      const double v_exit = flux.d1(exit);
      if (std::abs(v_exit - v_entry) <= 1e-9 * std::max(1.0, std::abs(v_entry))) {
        // flat arc: a contact discontinuity, not a genuine fan
        waves.push_back(ShockWave{0.5 * (v_entry + v_exit), entry, exit});
      } else {
        waves.push_back(RarefactionWave{entry, exit, v_entry, v_exit});
      }
    }
  }

  // adjacent discontinuities moving at one speed are a single shock
  std::vector<Wave> merged;
  for (Wave& w : waves) {
    if (!merged.empty()) {
      auto* prev = std::get_if<ShockWave>(&merged.back());
      const auto* cur = std::get_if<ShockWave>(&w);
      if (prev != nullptr && cur != nullptr &&
          std::abs(prev->speed - cur->speed) <= 1e-9 * std::max(1.0, std::abs(cur->speed))) {
        prev->s_right = cur->s_right;
        prev->speed = (flux.value(prev->s_left) - flux.value(prev->s_right)) /
                      (prev->s_left - prev->s_right);
        continue;
      }
    }
    merged.push_back(std::move(w));
  }
  return RiemannSolution(flux, s_left, s_right, std::move(merged));
}

}  // namespace hcbl
