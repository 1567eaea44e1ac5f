#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "canard/certificates.hpp"

using namespace canard;
using Catch::Approx;

namespace {
const SystemSpec fig4 = SystemSpec::preset("fig4");
const SystemSpec fig6 = SystemSpec::preset("fig6");
}  // namespace

TEST_CASE("polygon helpers") {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(polygon_signed_area(square) == Approx(1.0));
  CHECK(point_in_polygon(square, {0.5, 0.5}));
  CHECK_FALSE(point_in_polygon(square, {1.5, 0.5}));
  CHECK(polygon_inside_depth(square, {0.5, 0.5}) == Approx(0.5));
  CHECK(polygon_inside_depth(square, {2.0, 0.5}) == Approx(-1.0));
}

TEST_CASE("W region on fig4 at lambda = 0.5") {
  const SystemSpec spec = fig4.with_lambda(0.5);
  const auto [region, result] = build_W(spec, BuildWOptions{-3.0, -1.0, {}, 200});
  REQUIRE(result.verified);
  CHECK(result.min_inward_product >= -1e-9);
  CHECK(result.failure_points.empty());

  SECTION("geometry follows the construction rules") {
    CHECK(region.y1 == Approx(-1.0 * (0.5 - region.x_hat)));
    CHECK(region.y3 == Approx(2.304).epsilon(1e-12));
    CHECK(region.y5 > region.y3);
    CHECK(region.y5 < spec.g()(region.x_hat));
    // x2 = rightmost solution of h(x) = y1, plus 1
    CHECK(spec.h()(region.x2 - 1.0) == Approx(region.y1).margin(1e-9));
    CHECK(region.m4 > region.m4_literal_bound);
    CHECK(polygon_signed_area(region.vertices) > 0.0);  // CCW
  }

  SECTION("re-verification at doubled density is stable") {
    BuildWOptions dense;
    dense.x_hat = region.x_hat;
    dense.m1 = region.m1;
    dense.m4 = region.m4;
    dense.samples = 400;
    const auto [region2, result2] = build_W(spec, dense);
    CHECK(result2.verified);
    CHECK(std::abs(result2.min_inward_product - result.min_inward_product) <= 1e-6);
  }

  SECTION("interior trajectories stay confined") {
    double worst = 0.0;
    const bool ok = region_confines(spec, region.vertices, 20, 100.0 / spec.epsilon(), 1e-9,
                                    20240901, &worst);
    CHECK(ok);
    CHECK(worst >= -1e-9);
  }

  SECTION("equilibrium lies inside W") {
    CHECK(point_in_polygon(region.vertices, {0.5, spec.F(0.5)}));
  }
}

TEST_CASE("W requires 0 < lambda < x_M and admissible parameters") {
  CHECK_THROWS_AS(build_W(fig4.with_lambda(-0.1), {}), error);
  CHECK_THROWS_AS(build_W(fig4.with_lambda(2.0), {}), error);
  BuildWOptions bad;
  bad.x_hat = 1.0;
  CHECK_THROWS_AS(build_W(fig4.with_lambda(0.5), bad), error);
}

TEST_CASE("shallow x_hat is re-chosen automatically") {
  BuildWOptions opt;
  opt.x_hat = -0.01;  // g(-0.01) is far below the fold height
  opt.m1 = -1.0;
  const auto [region, result] = build_W(fig4.with_lambda(0.5), opt);
  CHECK(result.verified);
  CHECK(region.x_hat < -0.01);  // deepened by the retry loop
  CHECK(fig4.g()(region.x_hat) > region.y5);
}

TEST_CASE("super-explosion witness on fig6") {
  const SystemSpec spec = fig6.with_lambda(0.001);
  const PeriodicOrbit orbit = find_periodic_orbit(spec);
  const auto [region, result] = superexplosion_witness(spec, {}, &orbit);
  REQUIRE(result.verified);
  CHECK(region.y_hat < 0.0);
  CHECK(region.y_hat > -0.1);
  // the located orbit crosses the section strictly below the witness
  CHECK(orbit.section_y < region.y_hat);

  SECTION("gate: Hopf-like systems are rejected") {
    CHECK_THROWS_AS(superexplosion_witness(fig4.with_lambda(0.001)), error);
  }
  SECTION("larger lambda still yields a witness") {
    const SystemSpec at = fig6.with_lambda(0.3);
    const PeriodicOrbit orb = find_periodic_orbit(at);
    const auto [r2, res2] = superexplosion_witness(at, {}, &orb);
    CHECK(res2.verified);
  }
}

TEST_CASE("subcritical super-explosion coexistence witness") {
  // g(x) = -0.5 x (|g'(0)| = 0.5 < 2 sqrt(0.2)), h from fig6, lambda = -0.05
  const SystemSpec spec(0.2, -0.05, Polynomial{0.0, -0.5}, Polynomial{0.0, 2.0, -0.5, -1.0});
  const auto [region, rep] = subcritical_witness(spec);
  REQUIRE(rep.witness_verified);
  CHECK(rep.equilibrium_stable);
  CHECK(rep.orbit_found);
  CHECK(rep.orbit_outside_witness);
  CHECK(rep.coexistence());
  CHECK(rep.beta_prime > rep.beta);
  CHECK(rep.beta > spec.F(-0.05));
  CHECK(rep.beta < spec.F(spec.geometry().x_M));

  SECTION("the equilibrium attracts a 1e-3 ball") {
    const State eq{-0.05, spec.F(-0.05)};
    IntegrateOptions io;
    io.t_max = 60.0 / spec.epsilon();
    io.tol = 1e-9;
    io.store_dense = false;
    for (int k = 0; k < 16; ++k) {
      const double ang = 2.0 * std::acos(-1.0) * k / 16;
      const State p{eq.x + 1e-3 * std::cos(ang), eq.y + 1e-3 * std::sin(ang)};
      const Trajectory traj = integrate(spec, p, io);
      CHECK(norm(traj.back() - eq) < 1e-4);
    }
  }

  SECTION("supercritical slopes are rejected") {
    const SystemSpec super(0.2, -0.05, Polynomial{0.0, -2.0}, Polynomial{0.0, 2.0, -0.5, -1.0});
    CHECK_THROWS_AS(subcritical_witness(super), error);
  }
  SECTION("far-negative lambda yields no witness") {
    const SystemSpec far(0.2, -0.5, Polynomial{0.0, -0.5}, Polynomial{0.0, 2.0, -0.5, -1.0});
    CHECK_THROWS_MATCHES(subcritical_witness(far), error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("NoWitness")));
  }
}

TEST_CASE("certificates serialize with parameters and verdict") {
  const auto [region, result] = build_W(fig4.with_lambda(0.5), {});
  const auto j = to_json(region);
  CHECK(j.at("vertices").size() == 6);
  CHECK(j.contains("m4_literal_bound"));
  const auto jr = to_json(result);
  CHECK(jr.at("verified").get<bool>());
  CHECK(jr.contains("min_inward_product"));
}
