#include <doctest.h>

#include <cmath>

#include "sedlab/error.hpp"
#include "sedlab/kepler.hpp"
#include "sedlab/phase_space.hpp"
#include "sedlab/quadrature.hpp"

using namespace sedlab;

namespace {

QuadratureSpec tight() {
  QuadratureSpec s;
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-300;
  return s;
}

}  // namespace

TEST_CASE("ground-state parameters") {
  CHECK(GroundStateParams::from_d(0.0).ell0 == 0.0);
  CHECK(GroundStateParams::from_d(0.0).E0 == -0.5);
  double prev = INFINITY;
  for (double d = -3.0; d <= 0.25; d += 0.25) {
    const auto gs = GroundStateParams::from_d(d);
    CHECK(gs.ell0 < prev);
    CHECK(gs.ell0 * (gs.ell0 + 1.0) == doctest::Approx(-d).scale(1.0));
    prev = gs.ell0;
  }
  CHECK_THROWS_AS(GroundStateParams::from_d(0.3), DomainError);
}

TEST_CASE("gamma function at integer and half-integer points") {
  CHECK(std::tgamma(5.0) == doctest::Approx(24.0).epsilon(1e-14));
  CHECK(std::tgamma(0.5) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-14));
  CHECK(std::tgamma(3.5) == doctest::Approx(15.0 * std::sqrt(kPi) / 8.0).epsilon(1e-14));
  CHECK(std::tgamma(7.5) == doctest::Approx(135135.0 * std::sqrt(kPi) / 128.0).epsilon(1e-14));
}

TEST_CASE("psi0 is normalized and reduces to the hydrogen ground state") {
  CHECK(psi0(1.3, GroundStateParams::from_d(0.0)) * psi0(1.3, GroundStateParams::from_d(0.0)) ==
        doctest::Approx(std::exp(-2.6) / kPi).epsilon(1e-14));
  for (double d : {0.0, -1.0, 0.2}) {
    const auto gs = GroundStateParams::from_d(d);
    const double n =
        integrate_1d([&](double r) { return 4.0 * kPi * r * r * std::pow(psi0(r, gs), 2); }, 0.0, INFINITY, tight()).value;
    CHECK(n == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("momentum marginal equals psi0 squared") {
  for (double d : {0.0, -1.0, 0.2}) {
    const auto gs = GroundStateParams::from_d(d);
    for (double r : {0.3, 1.0, 3.0}) {
      const double p2 = std::pow(psi0(r, gs), 2);
      CHECK(momentum_marginal_quadrature(r, gs).value == doctest::Approx(p2).epsilon(1e-6));
      CHECK(momentum_marginal(r, gs) == doctest::Approx(p2).epsilon(1e-12));
    }
  }
}

TEST_CASE("densities of the conserved quantities are normalized") {
  for (double d : {0.0, -1.0, 0.2}) {
    const auto gs = GroundStateParams::from_d(d);
    auto over_kappa = [&](double E) {
      return integrate_1d([&](double k) { return dist_E_kappa(E, k, gs); }, 0.0, 1.0, tight()).value;
    };
    CHECK(integrate_1d(over_kappa, -INFINITY, 0.0, tight()).value == doctest::Approx(1.0).epsilon(1e-6));
    auto over_L = [&](double E) {
      const double lmax = 1.0 / std::sqrt(-2.0 * E);
      return integrate_1d([&](double L) { return dist_E_Leff(E, L, gs); }, 0.0, lmax, tight()).value;
    };
    CHECK(integrate_1d(over_L, -INFINITY, 0.0, tight()).value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(dist_E_kappa(-0.4, 0.5, gs) >= 0.0);
  }
  const auto gs = GroundStateParams::from_d(0.0);
  CHECK_THROWS_AS(dist_E_kappa(0.1, 0.5, gs), DomainError);
  CHECK_THROWS_AS(dist_E_kappa(-0.5, 1.2, gs), DomainError);
  CHECK_THROWS_AS(dist_E_Leff(-0.5, 1.5, gs), DomainError);
}

TEST_CASE("phase-space point parametrization") {
  const auto p = PhaseSpacePoint::at(1.0, 3.0, 0.4);
  // Energy p_r^2/2 + L^2/(2 r^2) - 1/r = -1/R at d = 0.
  CHECK(0.5 * p.p_r * p.p_r + p.Leff * p.Leff / 2.0 - 1.0 == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(PhaseSpacePoint::at(1.0, 0.5, 0.4), DomainError);
  CHECK_THROWS_AS(PhaseSpacePoint::at(1.0, 2.0, 4.0), DomainError);
  CHECK(density_Ppr(p, GroundStateParams::from_d(0.0)) > 0.0);
}

TEST_CASE("conjectured L distribution") {
  const auto gs = GroundStateParams::from_d(0.0);
  // The marginal over E of P_{E L} at d = 0 (kappa = sqrt(2|E|) L <= 1).
  for (double L : {0.3, 0.8, 1.5}) {
    auto f = [&](double E) { return dist_E_Leff(E, L, gs); };
    const double direct = integrate_1d(f, -0.5 / (L * L), 0.0, tight()).value;
    CHECK(conjecture_L_density(L) == doctest::Approx(direct).epsilon(1e-8));
  }
  for (double L : {0.2, 0.7, 1.4}) {
    const double q =
        integrate_1d([](double x) { return conjecture_L_density(x); }, 0.0, L, tight()).value;
    CHECK(conjecture_L_cdf(L) == doctest::Approx(q).epsilon(1e-10));
  }
  CHECK(conjecture_L_cdf(8.0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto curve = conjecture_L_curve({0.0, 0.5, 1.0}, gs);
  CHECK(curve.size() == 3);
  CHECK(curve[1].second == conjecture_L_density(0.5));
  CHECK_THROWS_AS(conjecture_L_curve({0.5}, GroundStateParams::from_d(-1.0)), DomainError);
}
