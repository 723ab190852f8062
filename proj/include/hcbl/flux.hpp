#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hcbl {

// Saturations inside [0,1] evaluate the model formula; outside, the flux
// continues linearly (C^1 match at the endpoint) so that Newton overshoot
// keeps a well-defined Jacobian. The margin must hold the transient
// excursions of undamped Newton on the concave/convex auxiliary problems
// (observed up to ~4 saturation units at CFL 10); beyond it evaluation
// raises a domain error and the solver reports domain_escape.
inline constexpr double kSaturationBandLo = -10.0;
inline constexpr double kSaturationBandHi = 11.0;
inline constexpr double kSaturationBandTol = 1e-12;

namespace detail {

inline void check_saturation_band(double s) {
  if (!(s >= kSaturationBandLo - kSaturationBandTol &&
        s <= kSaturationBandHi + kSaturationBandTol))
    throw std::domain_error("saturation " + std::to_string(s) +
                            " outside the extended evaluation band");
}

}  // namespace detail

/// Corey-type fractional flow: f(S) = S^n_w / (S^n_w + M (1-S)^n_n).
/// Immutable after construction; f(0) = 0 and f(1) = 1 exactly.
class CoreyFlux {
 public:
  CoreyFlux() = default;
  CoreyFlux(double n_w, double n_n, double viscosity_ratio)
      : n_w_(n_w), n_n_(n_n), m_(viscosity_ratio) {
    if (!(n_w_ >= 1.0) || !(n_n_ >= 1.0))
      throw std::invalid_argument("Corey exponents must be >= 1");
    if (!(m_ > 0.0)) throw std::invalid_argument("viscosity ratio M must be > 0");
  }

  double n_w() const { return n_w_; }
  double n_n() const { return n_n_; }
  double viscosity_ratio() const { return m_; }

  double value(double s) const {
    detail::check_saturation_band(s);
    if (s < 0.0) return d1_interior(0.0) * s;
    if (s > 1.0) return 1.0 + d1_interior(1.0) * (s - 1.0);
    return value_interior(s);
  }

  double d1(double s) const {
    detail::check_saturation_band(s);
    return d1_interior(std::clamp(s, 0.0, 1.0));
  }

  double d2(double s) const {
    detail::check_saturation_band(s);
    if (s < 0.0 || s > 1.0) return 0.0;
    return d2_interior(s);
  }

 private:
  double value_interior(double s) const {
    const double a = std::pow(s, n_w_);
    const double b = m_ * std::pow(1.0 - s, n_n_);
    return a / (a + b);
  }

  double d1_interior(double s) const {
    const double a = std::pow(s, n_w_);
    const double b = m_ * std::pow(1.0 - s, n_n_);
    const double da = n_w_ * std::pow(s, n_w_ - 1.0);
    const double db = -m_ * n_n_ * std::pow(1.0 - s, n_n_ - 1.0);
    const double den = a + b;
    return (da * b - a * db) / (den * den);
  }

  double d2_interior(double s) const {
    const double a = std::pow(s, n_w_);
    const double b = m_ * std::pow(1.0 - s, n_n_);
    const double da = n_w_ * std::pow(s, n_w_ - 1.0);
    const double db = -m_ * n_n_ * std::pow(1.0 - s, n_n_ - 1.0);
    // exponent-1 factors vanish identically, avoid 0 * inf at the endpoints
    const double dda = (n_w_ == 1.0) ? 0.0 : n_w_ * (n_w_ - 1.0) * std::pow(s, n_w_ - 2.0);
    const double ddb = (n_n_ == 1.0) ? 0.0 : m_ * n_n_ * (n_n_ - 1.0) * std::pow(1.0 - s, n_n_ - 2.0);
    const double num = da * b - a * db;
    const double dnum = dda * b - a * ddb;
    const double den = a + b;
    const double dden = da + db;
    return (dnum * den - 2.0 * num * dden) / (den * den * den);
  }

  double n_w_ = 2.0;
  double n_n_ = 2.0;
  double m_ = 1.0;
};

/// Same viscosity ratio, linear relative permeabilities.
inline CoreyFlux linearized_flux(const CoreyFlux& flux) {
  return CoreyFlux(1.0, 1.0, flux.viscosity_ratio());
}

enum class HullOrientation { concave_upper, convex_lower };

/// Knot of a piecewise hull description. The segment to the right of the
/// knot, up to the next knot, is a straight chord when linear_right is set
/// and the base function otherwise. The last knot's flag is unused.
struct HullKnot {
  double s;
  double f;
  bool linear_right;
};

/// Upper concave (or lower convex) envelope of a Corey flux on [0,1]:
/// chords bridge the non-concave (non-convex) stretches, the base function
/// is kept elsewhere. Knot values lie on the base curve, so the hull is
/// continuous and C^1 at the tangency junctions up to construction
/// tolerance.
class HullFlux {
 public:
  HullFlux(CoreyFlux base, HullOrientation orientation, std::vector<HullKnot> knots)
      : base_(base), orientation_(orientation), knots_(std::move(knots)) {
    if (knots_.size() < 2) throw std::invalid_argument("hull needs at least two knots");
  }

  const CoreyFlux& base() const { return base_; }
  HullOrientation orientation() const { return orientation_; }
  const std::vector<HullKnot>& breakpoints() const { return knots_; }

  double value(double s) const {
    detail::check_saturation_band(s);
    const double lo = knots_.front().s;
    const double hi = knots_.back().s;
    if (s < lo) return knots_.front().f + edge_slope_lo() * (s - lo);
    if (s > hi) return knots_.back().f + edge_slope_hi() * (s - hi);
    const std::size_t i = segment_index(s);
    if (knots_[i].linear_right) {
      const double t = (s - knots_[i].s) / (knots_[i + 1].s - knots_[i].s);
      return knots_[i].f + t * (knots_[i + 1].f - knots_[i].f);
    }
    return base_.value(s);
  }

  double d1(double s) const {
    detail::check_saturation_band(s);
    const double lo = knots_.front().s;
    const double hi = knots_.back().s;
    if (s < lo) return edge_slope_lo();
    if (s > hi) return edge_slope_hi();
    const std::size_t i = segment_index(s);
    if (knots_[i].linear_right) return segment_slope(i);
    return base_.d1(s);
  }

  double d2(double s) const {
    detail::check_saturation_band(s);
    if (s < knots_.front().s || s > knots_.back().s) return 0.0;
    const std::size_t i = segment_index(s);
    if (knots_[i].linear_right) return 0.0;
    return base_.d2(s);
  }

 private:
  std::size_t segment_index(double s) const {
    std::size_t lo = 0, hi = knots_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (knots_[mid].s <= s)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  double segment_slope(std::size_t i) const {
    return (knots_[i + 1].f - knots_[i].f) / (knots_[i + 1].s - knots_[i].s);
  }

  double edge_slope_lo() const {
    return knots_.front().linear_right ? segment_slope(0) : base_.d1(knots_.front().s);
  }
  double edge_slope_hi() const {
    const std::size_t last = knots_.size() - 2;
    return knots_[last].linear_right ? segment_slope(last) : base_.d1(knots_.back().s);
  }

  CoreyFlux base_;
  HullOrientation orientation_;
  std::vector<HullKnot> knots_;
};

/// Value-semantic wrapper over the flux variants used by the discretization.
class FluxModel {
 public:
  FluxModel() : model_(CoreyFlux{}) {}
  FluxModel(CoreyFlux f) : model_(std::move(f)) {}
  FluxModel(HullFlux f) : model_(std::move(f)) {}

  double value(double s) const {
    return std::visit([s](const auto& m) { return m.value(s); }, model_);
  }
  double d1(double s) const {
    return std::visit([s](const auto& m) { return m.d1(s); }, model_);
  }
  double d2(double s) const {
    return std::visit([s](const auto& m) { return m.d2(s); }, model_);
  }

  bool is_hull() const { return std::holds_alternative<HullFlux>(model_); }
  const CoreyFlux* as_corey() const { return std::get_if<CoreyFlux>(&model_); }
  const HullFlux* as_hull() const { return std::get_if<HullFlux>(&model_); }

 private:
  std::variant<CoreyFlux, HullFlux> model_;
};

namespace detail {

struct EnvelopeSample {
  double s;
  double f;
};

inline double cross(const EnvelopeSample& o, const EnvelopeSample& a, const EnvelopeSample& b) {
  return (a.s - o.s) * (b.f - o.f) - (a.f - o.f) * (b.s - o.s);
}

// Chord-slope minus local derivative: zero at a tangency point of the chord
// anchored at (s0, f0).
inline double tangency_gap(const FluxModel& flux, double s, double s0, double f0) {
  return flux.d1(s) - (flux.value(s) - f0) / (s - s0);
}

// Locates the tangency point of a chord anchored at (s0, f0) inside [a, b].
// Standard bisection when the gap changes sign across the bracket. When the
// base function is itself straight on one side of the junction the gap is
// identically zero there, so we bisect on the boundary of the zero set
// instead. Falls back to the sampled estimate when neither applies.
inline double refine_tangency(const FluxModel& flux, double s0, double f0, double a, double b,
                              double fallback) {
  constexpr double tol_s = 1e-13;
  constexpr double zero_gap = 1e-10;
  if (!(a < b)) return fallback;
  double ga = tangency_gap(flux, a, s0, f0);
  double gb = tangency_gap(flux, b, s0, f0);
  if (ga == 0.0 && gb == 0.0) return fallback;
  if ((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0)) {
    while (b - a > tol_s) {
      const double mid = 0.5 * (a + b);
      const double gm = tangency_gap(flux, mid, s0, f0);
      if (gm == 0.0) return mid;
      if ((gm < 0.0) == (ga < 0.0)) {
        a = mid;
        ga = gm;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  }
  const bool za = std::abs(ga) <= zero_gap;
  const bool zb = std::abs(gb) <= zero_gap;
  if (za == zb) return fallback;
  // bisect the boundary between the zero plateau and the curved side
  while (b - a > tol_s) {
    const double mid = 0.5 * (a + b);
    const bool zm = std::abs(tangency_gap(flux, mid, s0, f0)) <= zero_gap;
    if (zm == za)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Builds the upper concave (or lower convex) envelope of a flux on
/// [lo, hi]: monotone-chain hull of uniformly sampled points, with every
/// interior chord endpoint refined to the tangency condition
/// f'(s*) = (f(s*) - f(s0)) / (s* - s0) against the opposite chord anchor.
/// Knot ordinates are re-evaluated on the base curve.
inline std::vector<HullKnot> build_envelope(const FluxModel& flux, double lo, double hi,
                                            HullOrientation orientation, int n_samples) {
  if (!(lo < hi)) throw std::invalid_argument("build_envelope: need lo < hi");
  if (n_samples < 4) throw std::invalid_argument("build_envelope: n_samples too small");

  const int n = n_samples;
  const double h = (hi - lo) / (n - 1);
  std::vector<detail::EnvelopeSample> pts(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double s = (j == n - 1) ? hi : lo + j * h;
    pts[static_cast<std::size_t>(j)] = {s, flux.value(s)};
  }

  const bool upper = orientation == HullOrientation::concave_upper;
  std::vector<int> hull;
  hull.reserve(pts.size());
  for (int j = 0; j < n; ++j) {
    while (hull.size() >= 2) {
      const double c = detail::cross(pts[static_cast<std::size_t>(hull[hull.size() - 2])],
                                     pts[static_cast<std::size_t>(hull.back())],
                                     pts[static_cast<std::size_t>(j)]);
      if ((upper && c >= 0.0) || (!upper && c <= 0.0))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(j);
  }

  // Hull edges spanning more than one sample are chords bridging a
  // non-envelope stretch; single-sample edges follow the base curve.
  // Collapse consecutive base edges into runs and record the boundaries.
  struct Segment {
    double s_lo;
    double s_hi;
    bool chord;
  };
  std::vector<Segment> segs;
  for (std::size_t e = 0; e + 1 < hull.size(); ++e) {
    const int ia = hull[e];
    const int ib = hull[e + 1];
    const bool chord = (ib - ia) > 1;
    const double sa = pts[static_cast<std::size_t>(ia)].s;
    const double sb = pts[static_cast<std::size_t>(ib)].s;
    if (!segs.empty() && !segs.back().chord && !chord)
      segs.back().s_hi = sb;
    else
      segs.push_back({sa, sb, chord});
  }
  if (segs.empty()) segs.push_back({lo, hi, false});

  // Slide every chord endpoint that borders a base run to the tangency
  // point, anchoring the chord at its opposite end. A couple of passes
  // settle chords whose both ends are interior.
  for (int pass = 0; pass < 3; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (!segs[i].chord) continue;
      const bool left_refinable = i > 0 && !segs[i - 1].chord;
      const bool right_refinable = i + 1 < segs.size() && !segs[i + 1].chord;
      if (left_refinable) {
        const double anchor_s = segs[i].s_hi;
        const double anchor_f = flux.value(anchor_s);
        const double a = std::max(segs[i - 1].s_lo, segs[i].s_lo - h);
        const double b = std::min(anchor_s - 0.25 * h, segs[i].s_lo + h);
        const double refined = detail::refine_tangency(flux, anchor_s, anchor_f, a, b, segs[i].s_lo);
        if (refined != segs[i].s_lo) {
          segs[i].s_lo = refined;
          segs[i - 1].s_hi = refined;
          moved = true;
        }
      }
      if (right_refinable) {
        const double anchor_s = segs[i].s_lo;
        const double anchor_f = flux.value(anchor_s);
        const double a = std::max(anchor_s + 0.25 * h, segs[i].s_hi - h);
        const double b = std::min(segs[i + 1].s_hi, segs[i].s_hi + h);
        const double refined = detail::refine_tangency(flux, anchor_s, anchor_f, a, b, segs[i].s_hi);
        if (refined != segs[i].s_hi) {
          segs[i].s_hi = refined;
          segs[i + 1].s_lo = refined;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }

  // Neighboring chords with matching slopes are one straight piece split by
  // rounding noise in the collinearity test; coalesce them.
  {
    std::vector<Segment> merged;
    for (const Segment& seg : segs) {
      if (!merged.empty() && merged.back().chord && seg.chord) {
        const auto slope = [&](const Segment& s) {
          return (flux.value(s.s_hi) - flux.value(s.s_lo)) / (s.s_hi - s.s_lo);
        };
        if (std::abs(slope(merged.back()) - slope(seg)) <=
            1e-9 * std::max(1.0, std::abs(slope(seg)))) {
          merged.back().s_hi = seg.s_hi;
          continue;
        }
      }
      merged.push_back(seg);
    }
    segs = std::move(merged);
  }

  std::vector<HullKnot> result;
  result.reserve(segs.size() + 1);
  for (const auto& seg : segs) {
    if (!(seg.s_hi > seg.s_lo + 1e-12)) continue;  // collapsed during refinement
    if (result.empty())
      result.push_back({seg.s_lo, flux.value(seg.s_lo), seg.chord});
    else
      result.back().linear_right = seg.chord;
    result.push_back({seg.s_hi, flux.value(seg.s_hi), false});
  }
  if (result.size() < 2) {
    result.clear();
    result.push_back({lo, flux.value(lo), false});
    result.push_back({hi, flux.value(hi), false});
  }
  result.front().s = lo;
  result.front().f = flux.value(lo);
  result.back().s = hi;
  result.back().f = flux.value(hi);
  return result;
}

/// Envelope of a Corey flux over the full saturation interval. The wave
/// direction picks the orientation: an inflow state above the initial state
/// travels on the upper concave envelope, the reverse on the lower convex
/// one.
inline HullFlux build_hull(const CoreyFlux& flux, double s_left, double s_right,
                           int n_samples = 1024) {
  if (!(s_left >= 0.0 && s_left <= 1.0) || !(s_right >= 0.0 && s_right <= 1.0))
    throw std::invalid_argument("build_hull: states must lie in [0,1]");
  if (s_left == s_right)
    throw std::invalid_argument("build_hull: degenerate states, no wave direction");
  if (n_samples < 64) throw std::invalid_argument("build_hull: n_samples must be >= 64");
  const HullOrientation orientation =
      s_left > s_right ? HullOrientation::concave_upper : HullOrientation::convex_lower;
  auto knots = build_envelope(FluxModel(flux), 0.0, 1.0, orientation, n_samples);
  return HullFlux(flux, orientation, std::move(knots));
}

}  // namespace hcbl
