#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "canard/bifurcation.hpp"

using namespace canard;
using Catch::Approx;

namespace {
const SystemSpec fig4 = SystemSpec::preset("fig4");
const SystemSpec fig6 = SystemSpec::preset("fig6");
}  // namespace

TEST_CASE("closed-form eigenvalues match a generic 2x2 eigensolver") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> slope(-3.0, 3.0), eps_d(1e-4, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = slope(rng), eps = eps_d(rng);
    const EigenPair p = eigen_from_slope(s, eps);

    Eigen::Matrix2d J;
    J << s, -1.0, eps, 0.0;
    const Eigen::EigenSolver<Eigen::Matrix2d> solver(J);
    auto ev = solver.eigenvalues();
    // match by nearest
    const std::complex<double> a(ev(0).real(), ev(0).imag());
    const std::complex<double> b(ev(1).real(), ev(1).imag());
    const double d1 = std::abs(a - p.mu_plus) + std::abs(b - p.mu_minus);
    const double d2 = std::abs(a - p.mu_minus) + std::abs(b - p.mu_plus);
    worst = std::max(worst, std::min(d1, d2));

    // characteristic polynomial identities
    CHECK(std::abs((p.mu_plus * p.mu_minus).real() - eps) <= 1e-10);
    CHECK(std::abs((p.mu_plus + p.mu_minus).real() - s) <= 1e-10);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("equilibrium reports match hand-computed examples") {
  SECTION("fig6 at lambda = 0.1: unstable node") {
    const EquilibriumReport rep = equilibrium(fig6.with_lambda(0.1));
    CHECK(rep.primary.slope == Approx(1.87));  // h'(0.1) = -(1.1)(0.3-2) .. = 1.87
    CHECK(rep.primary.mu_plus.real() == Approx(1.756).margin(5e-4));
    CHECK(rep.primary.mu_minus.real() == Approx(0.114).margin(5e-4));
    CHECK(rep.primary.kind == EquilibriumKind::node);
    CHECK(rep.primary.stability == Stability::unstable);
  }
  SECTION("fig4 at lambda = 1: unstable node") {
    const EquilibriumReport rep = equilibrium(fig4.with_lambda(1.0));
    CHECK(rep.primary.slope == Approx(1.92));
    CHECK(rep.primary.mu_plus.real() == Approx(1.8095).margin(5e-5));
    CHECK(rep.primary.mu_minus.real() == Approx(0.1105).margin(5e-5));
  }
  SECTION("zero discriminant: degenerate node") {
    const EigenPair p = eigen_from_slope(1.0, 0.25);
    CHECK(p.mu_plus.real() == Approx(0.5));
    CHECK(p.mu_minus.real() == Approx(0.5));
    CHECK(p.kind == EquilibriumKind::degenerate_node);
  }
  SECTION("lambda = 0 reports both one-sided pairs") {
    const EquilibriumReport rep = equilibrium(fig4.with_lambda(0.0));
    REQUIRE(rep.left_sided.has_value());
    CHECK(rep.primary.slope == Approx(0.32));
    CHECK(rep.left_sided->slope == Approx(-2.0));
  }
  SECTION("strong eigenvector slope is eps / mu2") {
    const EquilibriumReport rep = equilibrium(fig6.with_lambda(0.001));
    REQUIRE(rep.primary.strong_eigvec_slope.has_value());
    CHECK(*rep.primary.strong_eigvec_slope == Approx(0.1056).margin(2e-4));
  }
}

TEST_CASE("corner classification on the figure systems") {
  SECTION("fig4: Hopf-like supercritical (0.32 < 2 sqrt(0.2), 2 > 0.32)") {
    const CornerBifurcationReport rep = corner_classify(fig4);
    CHECK(rep.kind == CornerKind::hopf_like);
    CHECK(rep.criticality == Criticality::supercritical);
    CHECK(rep.two_sqrt_eps == Approx(2.0 * std::sqrt(0.2)));
    CHECK_FALSE(rep.lambda_quantity.has_value());  // |g'(0)| = 2 is not a focus
  }
  SECTION("fig6: super-explosion supercritical (2 > 2 sqrt(0.2), 2 >= 2 sqrt(0.2))") {
    const CornerBifurcationReport rep = corner_classify(fig6);
    CHECK(rep.kind == CornerKind::super_explosion);
    CHECK(rep.criticality == Criticality::supercritical);
  }
  SECTION("subcritical Hopf-like when |g'(0)| < |h'(0)|") {
    const SystemSpec s(0.2, 0.0, Polynomial{0.0, -0.3, 0.4},
                       Polynomial{0.0, 0.5, 0.0, -0.5});
    const CornerBifurcationReport rep = corner_classify(s);
    CHECK(rep.kind == CornerKind::hopf_like);
    CHECK(rep.criticality == Criticality::subcritical);
    REQUIRE(rep.lambda_quantity.has_value());
    CHECK(*rep.lambda_quantity > 0.0);
  }
}

TEST_CASE("Lambda quantity values and sign structure") {
  CHECK(lambda_quantity(-0.3, 0.5, 0.2) == Approx(0.31816).margin(1e-5));
  CHECK(lambda_quantity(-0.5, 0.3, 0.2) == Approx(-0.31816).margin(1e-5));
  CHECK(lambda_quantity(-0.4, 0.4, 0.2) == Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(lambda_quantity(-2.0, 0.5, 0.2), error);

  SECTION("sign(Lambda) = sign(h'(0)^2 - g'(0)^2) on the focus-focus domain") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> eps_d(0.05, 0.5);
    for (int i = 0; i < 500; ++i) {
      const double eps = eps_d(rng);
      const double thr = 2.0 * std::sqrt(eps);
      std::uniform_real_distribution<double> s(0.01, thr * 0.99);
      const double hs = s(rng), gs = -s(rng);
      const double L = lambda_quantity(gs, hs, eps);
      const double ref = hs * hs - gs * gs;
      if (std::abs(ref) > 1e-12) CHECK(L * ref > 0.0);
    }
  }
}

TEST_CASE("classification kind flips exactly at h'(0) = 2 sqrt(eps)") {
  // fig6 has h'(0) = 2: threshold at eps = 1
  int flips = 0;
  CornerKind prev = CornerKind::degenerate;
  for (int i = 0; i <= 400; ++i) {
    const double eps = 0.5 + 1.0 * i / 400.0;  // crosses 1.0
    const CornerBifurcationReport rep = corner_classify(fig6.with_epsilon(eps));
    if (rep.kind == CornerKind::degenerate) continue;
    if (i > 0 && rep.kind != prev && prev != CornerKind::degenerate) {
      ++flips;
      CHECK(std::abs(2.0 - 2.0 * std::sqrt(eps)) <= 2.0 * std::sqrt(1.0 / 400.0));
    }
    prev = rep.kind;
  }
  CHECK(flips == 1);
}

TEST_CASE("fold Hopf report") {
  SECTION("fig4: lambda_H = 1.6, supercritical") {
    const FoldHopfReport rep = fold_hopf(fig4);
    CHECK(rep.lambda_H == Approx(1.6).margin(1e-9));
    CHECK(rep.criticality == Criticality::supercritical);
    CHECK(rep.lyapunov_sign_source == Approx(-6.0));
  }
  SECTION("fig6: lambda_H = 2/3, supercritical (h''' = -6)") {
    const FoldHopfReport rep = fold_hopf(fig6);
    CHECK(rep.lambda_H == Approx(2.0 / 3.0).margin(1e-12));
    CHECK(rep.criticality == Criticality::supercritical);
  }
  SECTION("eigenvalues at lambda_H are +- i sqrt(eps)") {
    const FoldHopfReport rep = fold_hopf(fig4);
    const EquilibriumReport eq = equilibrium(fig4.with_lambda(rep.lambda_H));
    CHECK(std::abs(eq.primary.mu_plus.real()) <= 1e-10);
    CHECK(eq.primary.mu_plus.imag() == Approx(std::sqrt(0.2)).margin(1e-10));
  }
  SECTION("Z-shaped systems have no smooth fold") {
    const SystemSpec z(0.2, 0.1, Polynomial{0.0, -1.0}, Polynomial{0.0, 1.0},
                       Polynomial{2.0, -1.0}, 1.0);
    CHECK_THROWS_AS(fold_hopf(z), error);
  }
}

TEST_CASE("nonexistence threshold constants") {
  SECTION("fig6: k = 2, m = -2, K = 4/3") {
    const NonexistenceThreshold th = nonexistence_threshold(fig6);
    CHECK(th.k == Approx(2.0));
    CHECK(th.m == Approx(-2.0));
    CHECK(th.x_M == Approx(2.0 / 3.0).margin(1e-12));
    CHECK(th.K == Approx(4.0 / 3.0).margin(1e-12));
    CHECK(th.hypothesis_ok);
  }
  SECTION("fig4: k = 25/12, K = 10/3") {
    const NonexistenceThreshold th = nonexistence_threshold(fig4);
    CHECK(th.k == Approx(25.0 / 12.0).margin(1e-12));
    CHECK(th.m == Approx(-2.0));
    CHECK(th.K == Approx(10.0 / 3.0).margin(1e-12));
  }
  SECTION("g with interior positive slope fails the hypothesis") {
    // g(x) = -x + x^3 has g'(-1) = 2 > 0
    const SystemSpec s(0.2, 0.1, Polynomial{0.0, -1.0, 0.0, 1.0},
                       Polynomial{0.0, 1.0, -1.0});
    CHECK_THROWS_AS(nonexistence_threshold(s), error);
  }
}

TEST_CASE("reports serialize with all threshold quantities") {
  const auto j = to_json(corner_classify(fig6));
  CHECK(j.at("kind") == "SuperExplosion");
  CHECK(j.at("criticality") == "supercritical");
  CHECK(j.at("thresholds").contains("two_sqrt_eps"));
  CHECK(j.at("thresholds").contains("h_slope"));
  CHECK(j.at("thresholds").contains("g_slope"));
  CHECK(j.contains("criticality_rule"));

  const auto jt = to_json(nonexistence_threshold(fig6));
  CHECK(jt.at("K").get<double>() == Approx(4.0 / 3.0));
}
