#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hcbl/flux.hpp"

using hcbl::build_hull;
using hcbl::CoreyFlux;
using hcbl::FluxModel;
using hcbl::HullFlux;
using hcbl::HullKnot;
using hcbl::HullOrientation;

namespace {

// For n_w = n_n = 2, M = 1 the Welge tangency from S_right = 0 solves
// 2 S*^2 = 1 analytically.
const double kTangency = std::sqrt(0.5);
const double kWelgeSlope = 0.5 * (1.0 + std::sqrt(2.0));  // f(S*)/S*

}  // namespace

TEST_CASE("welge construction for the symmetric flux, injection direction") {
  const CoreyFlux f(2.0, 2.0, 1.0);
  const HullFlux hull = build_hull(f, 1.0, 0.0);
  CHECK(hull.orientation() == HullOrientation::concave_upper);

  const auto& knots = hull.breakpoints();
  REQUIRE(knots.size() == 3);
  CHECK(knots[0].s == 0.0);
  CHECK(knots[0].f == 0.0);
  CHECK(knots[0].linear_right);
  CHECK(knots[1].s == doctest::Approx(kTangency).epsilon(1e-9));
  CHECK_FALSE(knots[1].linear_right);
  CHECK(knots[2].s == 1.0);
  CHECK(knots[2].f == 1.0);

  // chord slope equals the analytic Welge slope
  const double slope = knots[1].f / knots[1].s;
  CHECK(slope == doctest::Approx(kWelgeSlope).epsilon(1e-9));

  // inside the chord; frozen from 0.35 * (1 + sqrt 2)/2
  CHECK(hull.value(0.35) == doctest::Approx(0.35 * kWelgeSlope).epsilon(1e-10));
  CHECK(hull.value(0.35) == doctest::Approx(0.4224873734152916).epsilon(1e-6));
  CHECK(hull.d1(0.35) == doctest::Approx(kWelgeSlope).epsilon(1e-9));

  // beyond the tangency the base flux is kept: f(0.9) = 0.81/0.82
  CHECK(hull.value(0.9) == doctest::Approx(0.81 / 0.82).epsilon(1e-12));
  CHECK(hull.value(0.9) == doctest::Approx(f.value(0.9)).epsilon(1e-14));
  CHECK(hull.d1(0.9) == doctest::Approx(f.d1(0.9)).epsilon(1e-12));

  CHECK(hull.value(0.0) == 0.0);
  CHECK(hull.value(1.0) == 1.0);
}

TEST_CASE("convex lower hull is the point reflection, drainage direction") {
  const CoreyFlux f(2.0, 2.0, 1.0);
  const HullFlux hull = build_hull(f, 0.0, 1.0);
  CHECK(hull.orientation() == HullOrientation::convex_lower);

  const auto& knots = hull.breakpoints();
  REQUIRE(knots.size() == 3);
  CHECK_FALSE(knots[0].linear_right);
  CHECK(knots[1].s == doctest::Approx(1.0 - kTangency).epsilon(1e-8));
  CHECK(knots[1].linear_right);

  CHECK(hull.value(0.1) == doctest::Approx(f.value(0.1)).epsilon(1e-14));
  // reflected chord: slope equals the Welge slope
  const double slope = (1.0 - knots[1].f) / (1.0 - knots[1].s);
  CHECK(slope == doctest::Approx(kWelgeSlope).epsilon(1e-8));
  CHECK(hull.value(0.65) <= f.value(0.65) + 1e-12);
}

TEST_CASE("hull of a concave flux is the flux itself") {
  const CoreyFlux f(1.0, 1.0, 0.5);  // concave for M < 1
  for (int j = 1; j < 100; ++j) {
    const double s = j / 100.0;
    const double dd = f.value(s - 1e-4) - 2.0 * f.value(s) + f.value(s + 1e-4);
    REQUIRE(dd <= 1e-12);  // sanity: this test needs a concave base
  }
  const HullFlux hull = build_hull(f, 1.0, 0.0);
  for (int j = 0; j <= 2000; ++j) {
    const double s = j / 2000.0;
    CHECK(hull.value(s) == doctest::Approx(f.value(s)).epsilon(1e-10));
  }
}

TEST_CASE("concavity, majorant and endpoint invariants across fluxes") {
  const std::vector<CoreyFlux> fluxes = {CoreyFlux(2, 2, 1), CoreyFlux(2, 3, 2),
                                         CoreyFlux(3, 2, 0.5), CoreyFlux(1.5, 2.5, 4)};
  for (const CoreyFlux& f : fluxes) {
    const HullFlux upper = build_hull(f, 1.0, 0.0);
    const HullFlux lower = build_hull(f, 0.0, 1.0);
    CHECK(upper.value(0.0) == f.value(0.0));
    CHECK(upper.value(1.0) == f.value(1.0));
    CHECK(lower.value(0.0) == f.value(0.0));
    CHECK(lower.value(1.0) == f.value(1.0));
    const int n = 2000;
    const double h = 1.0 / n;
    bool majorant = true, minorant = true, concave = true, convex = true;
    for (int j = 0; j <= n; ++j) {
      const double s = j * h;
      if (upper.value(s) < f.value(s) - 1e-12) majorant = false;
      if (lower.value(s) > f.value(s) + 1e-12) minorant = false;
      if (j >= 1 && j + 1 <= n) {
        const double dd_up = upper.value(s - h) - 2.0 * upper.value(s) + upper.value(s + h);
        const double dd_lo = lower.value(s - h) - 2.0 * lower.value(s) + lower.value(s + h);
        if (dd_up > 1e-8) concave = false;
        if (dd_lo < -1e-8) convex = false;
      }
    }
    CHECK(majorant);
    CHECK(minorant);
    CHECK(concave);
    CHECK(convex);
  }
}

TEST_CASE("rebuilding the envelope of a hull reproduces it") {
  const CoreyFlux f(2.0, 2.0, 1.0);
  const HullFlux h1 = build_hull(f, 1.0, 0.0);
  const std::vector<HullKnot> knots2 =
      hcbl::build_envelope(FluxModel(h1), 0.0, 1.0, HullOrientation::concave_upper, 1024);
  const HullFlux h2(f, HullOrientation::concave_upper, knots2);
  for (int j = 0; j <= 5000; ++j) {
    const double s = j / 5000.0;
    CHECK(h2.value(s) == doctest::Approx(h1.value(s)).epsilon(1e-8));
  }
}

TEST_CASE("linear chord of positive length near the immobile saturation") {
  for (double n_w : {1.5, 2.0, 3.0}) {
    const CoreyFlux f(n_w, 2.0, 1.0);
    const HullFlux hull = build_hull(f, 1.0, 0.0);
    const auto& knots = hull.breakpoints();
    REQUIRE(knots.size() >= 2);
    CHECK(knots[0].s == 0.0);
    CHECK(knots[0].linear_right);
    CHECK(knots[1].s > 0.01);
  }
}

TEST_CASE("band extension of the hull") {
  const CoreyFlux f(2.0, 2.0, 1.0);
  const HullFlux hull = build_hull(f, 1.0, 0.0);
  // chord slope continues below 0; flat base derivative continues above 1
  CHECK(hull.value(-0.05) == doctest::Approx(-0.05 * kWelgeSlope).epsilon(1e-9));
  CHECK(hull.value(1.05) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(hull.value(hcbl::kSaturationBandLo - 1.0), std::domain_error);
}

TEST_CASE("degenerate and invalid hull requests are rejected") {
  const CoreyFlux f(2.0, 2.0, 1.0);
  CHECK_THROWS_AS(build_hull(f, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_hull(f, 1.2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_hull(f, 1.0, 0.0, 16), std::invalid_argument);
}
