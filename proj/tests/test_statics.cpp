#include <doctest.h>

#include <cmath>

#include "occmob/common.hpp"
#include "occmob/statics_lab.hpp"

using namespace occmob;

namespace {

StationaryParams baseline() {
  StationaryParams p;
  p.gamma = 0.95;
  p.b = 0.70;
  p.c = 1.0;
  p.k = 2.0;
  p.eta = 0.5;
  p.beta = 0.99;
  p.delta = 0.0;
  const int n = 121;
  p.z_levels = Eigen::VectorXd::LinSpaced(n, 0.50, 1.50);
  p.F = Eigen::VectorXd::Constant(n, 1.0 / n);
  return p;
}

}  // namespace

TEST_CASE("lemma signs: W^s - R responds to c, b, gamma, x as proved") {
  // near the regime boundary both cutoffs are interior and the cutoff-gap
  // responses carry the proved signs; away from it only the W^s - R signs
  // are robust (see the deep-rest case below)
  StationaryParams p = baseline();
  p.c = 4.0;
  {
    StationarySolution base = solve_stationary(p);
    REQUIRE(base.z_s_interior);
    REQUIRE(base.z_r_interior);
    REQUIRE_FALSE(base.all_markets_dead);
  }

  SUBCASE("c up: gap up, cutoff gap up") {
    SignCheck s = lemma_sign_check(p, LabParam::C);
    REQUIRE(s.interior);
    CHECK(s.d_gap > 0.0);
    CHECK(s.d_cutoff_gap >= 0.0);
  }
  SUBCASE("b up: gap up") {
    SignCheck s = lemma_sign_check(p, LabParam::B);
    REQUIRE(s.interior);
    CHECK(s.d_gap > 0.0);
    CHECK(s.d_cutoff_gap >= 0.0);
  }
  SUBCASE("gamma up: gap down") {
    SignCheck s = lemma_sign_check(p, LabParam::Gamma);
    REQUIRE(s.interior);
    CHECK(s.d_gap < 0.0);
    CHECK(s.d_cutoff_gap <= 0.0);
  }
  SUBCASE("x up from 1: gap up") {
    SignCheck s = lemma_sign_check(p, LabParam::X);
    REQUIRE(s.interior);
    CHECK(s.d_gap > 0.0);
  }
}

TEST_CASE("deep rest regime: W^s - R signs survive, reallocation cutoff sits at the corner") {
  StationaryParams p = baseline();
  p.c = 8.0;
  StationarySolution base = solve_stationary(p);
  REQUIRE(base.W_s - base.R > 0.0);
  REQUIRE_FALSE(base.z_r_interior);  // no reallocation region at all
  SignCheck sc = lemma_sign_check(p, LabParam::C);
  CHECK(sc.d_gap > 0.0);
  SignCheck sg = lemma_sign_check(p, LabParam::Gamma);
  CHECK(sg.d_gap < 0.0);
}

TEST_CASE("dense c-sweep: W^s - R monotone, sign flips from negative to positive") {
  StationaryParams p = baseline();
  double prev = -1e18;
  double at_zero = 0.0, at_high = 0.0;
  for (double c : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    StationaryParams q = p;
    q.c = c;
    StationarySolution s = solve_stationary(q);
    const double gap = s.W_s - s.R;
    CHECK(gap >= prev - 1e-9);
    prev = gap;
    if (c == 0.0) at_zero = gap;
    if (c == 16.0) at_high = gap;
  }
  CHECK(at_zero < 0.0);  // with free sampling the reallocation region is active
  CHECK(at_high > 0.0);  // prohibitive sampling shuts it down
}

TEST_CASE("b above max production kills every market") {
  StationaryParams p = baseline();
  p.b = 2.0;
  StationarySolution s = solve_stationary(p);
  CHECK(s.all_markets_dead);
  CHECK(s.theta_of_z(p.z_levels(p.z_levels.size() - 1)) == 0.0);
}

TEST_CASE("gamma = 1 reproduces the closed-form reservation equation") {
  StationaryParams p = baseline();
  p.gamma = 1.0;
  p.c = 0.35;  // interior cutoff in the permanent-z case
  StationarySolution s = solve_stationary(p);
  REQUIRE(s.z_r_interior);

  // independent root: ((1-eta)k/eta) (beta sum F max{theta, theta_r} - theta_r)
  // = c (1-beta), solved on the continuous z axis
  auto gap = [&](double zr) {
    const double fac = (1.0 - p.eta) * p.k / p.eta;
    const double theta_r = stationary_theta(p, p.y(zr));
    double integral = 0.0;
    for (int i = 0; i < p.z_levels.size(); ++i)
      integral += p.F(i) * std::max(stationary_theta(p, p.y(p.z_levels(i))), theta_r);
    return fac * (p.beta * integral - theta_r) - p.c * (1.0 - p.beta);
  };
  double lo = p.z_levels(0), hi = p.z_levels(p.z_levels.size() - 1);
  double flo = gap(lo);
  REQUIRE(flo > 0.0);
  REQUIRE(gap(hi) < 0.0);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if ((gap(mid) <= 0.0) == (flo <= 0.0))
      lo = mid;
    else
      hi = mid;
  }
  const double oracle_zr = 0.5 * (lo + hi);
  CHECK(std::abs(s.z_r - oracle_zr) < 1e-8);
}

TEST_CASE("gamma = 1 wage identity on active markets") {
  StationaryParams p = baseline();
  p.gamma = 1.0;
  p.c = 0.35;
  StationarySolution s = solve_stationary(p);
  // w = (1-eta) y + eta b + beta (1-eta) theta k
  for (double z : {0.9, 1.1, 1.3, 1.5}) {
    const double m = s.M_of_z(z), w = s.W_of_z(z);
    if (m - w <= 0.0) continue;
    const double theta = s.theta_of_z(z);
    const double w_e = w + (1.0 - p.eta) * (m - w);
    const double wage = (1.0 - p.beta) * w_e;
    const double identity =
        (1.0 - p.eta) * p.y(z) + p.eta * p.b + p.beta * (1.0 - p.eta) * theta * p.k;
    CHECK(wage == doctest::Approx(identity).epsilon(1e-9));
  }
}

TEST_CASE("rest region: job-finding term vanishes at the reallocation cutoff") {
  StationaryParams p = baseline();
  p.c = 8.0;  // deep rest region: z_s > z_r
  StationarySolution s = solve_stationary(p);
  REQUIRE(s.z_s > s.z_r);
  // at and below z_r the surplus is negative, so lambda theta (W^E - W^U) = 0
  CHECK(s.theta_of_z(s.z_r) == 0.0);
  CHECK(s.M_of_z(s.z_r) - s.W_of_z(s.z_r) < 0.0);
}

TEST_CASE("reallocation slopes, permanent-z case") {
  StationaryParams p = baseline();
  p.gamma = 1.0;
  p.A = 1.0;

  SUBCASE("frictionless with modular production is countercyclical") {
    StationaryParams q = p;
    q.production = LabProduction::Additive;
    q.c = 0.25;
    ReallocSlope r = realloc_slope(q, false);
    CHECK(r.interior);
    CHECK(r.slope_closed < 0.0);
  }

  SUBCASE("closed form matches finite differences within 1%") {
    StationaryParams q = p;
    q.c = 0.35;
    ReallocSlope fr = realloc_slope(q, true);
    CHECK(std::abs(fr.slope_closed - fr.slope_fd) <
          0.01 * std::max(std::abs(fr.slope_closed), 1e-6));
    StationaryParams qc = p;
    qc.production = LabProduction::Additive;
    qc.c = 0.25;
    ReallocSlope fl = realloc_slope(qc, false);
    CHECK(std::abs(fl.slope_closed - fl.slope_fd) <
          0.01 * std::max(std::abs(fl.slope_closed), 1e-6));
  }

  SUBCASE("frictional slope exceeds the frictionless slope at a matched cutoff") {
    const double z_star = 1.0537;  // off the F atoms so finite differences bracket cleanly
    StationaryParams qf = p;
    qf.c = matching_cost_for_cutoff(qf, true, z_star);
    REQUIRE(qf.c > 0.0);
    ReallocSlope fr = realloc_slope(qf, true);
    StationaryParams qc = p;
    qc.c = matching_cost_for_cutoff(qc, false, z_star);
    REQUIRE(qc.c > 0.0);
    ReallocSlope fl = realloc_slope(qc, false);
    CHECK(fr.z_r == doctest::Approx(z_star).epsilon(1e-6));
    CHECK(fl.z_r == doctest::Approx(z_star).epsilon(1e-6));
    CHECK(fr.slope_closed > fl.slope_closed);
  }

  SUBCASE("C_s ratio is at least one and increasing in z above the cutoff") {
    StationaryParams q = p;
    q.c = 0.35;
    ReallocSlope r = realloc_slope(q, true);
    auto cs = [&](double z) {
      const double th = stationary_theta(q, q.y(z));
      const double lam = std::pow(th, q.eta);
      return lam / (1.0 - q.beta + q.beta * lam);
    };
    const double cs_r = cs(r.z_r);
    double prev = 1.0;
    for (double z = r.z_r; z <= 1.5; z += 0.05) {
      const double ratio = cs(z) / cs_r;
      CHECK(ratio >= prev - 1e-12);
      prev = ratio;
    }
    CHECK(prev >= 1.0);
  }
}
