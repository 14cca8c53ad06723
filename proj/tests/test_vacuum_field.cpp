#include <doctest.h>

#include <cmath>
#include <random>

#include "sedlab/error.hpp"
#include "sedlab/kepler.hpp"
#include "sedlab/quadrature.hpp"
#include "sedlab/vacuum_field.hpp"

using namespace sedlab;

TEST_CASE("correlator is the cosine transform of the spectral density") {
  const double tau = 0.7;
  CHECK(field_correlator(0.0, tau) == doctest::Approx(6.0 / (kPi * std::pow(tau, 4))).epsilon(1e-15));
  QuadratureSpec s;
  s.rel_tol = 1e-12;
  s.abs_tol = 1e-13;
  for (double u : {0.0, 0.3, 1.0, 4.0}) {
    const double w =
        integrate_1d([&](double om) { return spectral_density(om, tau) * std::cos(om * u); }, 0.0, 60.0 / tau, s).value;
    CHECK(field_correlator(u, tau) == doctest::Approx(w).epsilon(1e-9).scale(1e-12));
  }
  CHECK(spectral_density(2.0, 0.5) == doctest::Approx(8.0 * std::exp(-1.0) / kPi).epsilon(1e-15));
}

TEST_CASE("realization layout and determinism") {
  const double tau = 0.1, D = 20.0;
  const FieldRealization a = build_realization(42, tau, D), b = build_realization(42, tau, D);
  CHECK(a.n_modes == minimum_modes(tau, D));
  CHECK(a.d_omega <= 2.0 * kPi / D);
  CHECK(a.frequency(a.n_modes - 1) == doctest::Approx(kOmegaMaxTau / tau));
  CHECK(a.period() >= D);
  CHECK(a.amplitude[1] == b.amplitude[1]);
  CHECK(a.phase[2] == b.phase[2]);
  CHECK(build_realization(43, tau, D).phase[0] != a.phase[0]);
  CHECK_THROWS_AS(build_realization(1, tau, D, a.n_modes - 1), DomainError);
  CHECK_THROWS_AS(evaluate(a, D + 1.0), DomainError);
}

TEST_CASE("mode power matches the spectral density") {
  // Sum of A^2 / 2 over modes estimates the band-limited variance.
  const double tau = 0.2, D = 200.0;
  const FieldRealization f = build_realization(7, tau, D);
  double total = 0.0, expected = 0.0, var = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int n = 0; n < f.n_modes; ++n) {
      const double s = spectral_density(f.frequency(n), tau) * f.d_omega;
      total += 0.5 * f.amplitude[c][n] * f.amplitude[c][n];
      expected += s;
      var += s * s;
    }
  CHECK(std::fabs(total - expected) < 4.0 * std::sqrt(var));
  CHECK(expected / 3 == doctest::Approx(field_correlator(0.0, tau)).epsilon(0.01));
}

TEST_CASE("sampled field reproduces the mode sum and its primitives") {
  const double tau = 0.25, D = 30.0;
  const FieldRealization f = build_realization(3, tau, D);
  const SampledField s(f, 32);
  const double sd = std::sqrt(field_correlator(0.0, tau));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ut(0.1, D - 0.1);
  for (int i = 0; i < 50; ++i) {
    const double t = ut(rng), h = 1e-4;
    const Vec3 direct = evaluate(f, t), grid = s.field(t);
    CHECK(norm(direct - grid) < 1e-4 * sd);
    const Vec3 dp = (1.0 / (2 * h)) * (s.primitive(t + h) - s.primitive(t - h));
    CHECK(norm(dp - grid) < 5e-4 * sd);
    const Vec3 dq = (1.0 / (2 * h)) * (s.second_primitive(t + h) - s.second_primitive(t - h));
    CHECK(norm(dq - s.primitive(t)) < 1e-4 * norm(s.primitive(t)) + 1e-8);
  }
  CHECK(norm(s.field(0.3) - s.field(0.3 + s.period())) < 1e-9 * sd);
  CHECK_THROWS_AS(SampledField(f, 2), DomainError);
}

TEST_CASE("ensemble autocorrelation and component statistics") {
  const double tau = 1.0;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 400; ++i) seeds.push_back(1000 + i);
  const auto est = autocorrelation_estimate(seeds, {0.0, 0.5, 1.0, 2.0, 4.0}, tau);
  for (const auto& e : est) {
    CHECK(e.stderr_ > 0.0);
    CHECK(e.exact == doctest::Approx(field_correlator(e.lag, tau)));
    CHECK(std::fabs(e.mean - e.exact) < 4.0 * e.stderr_);
  }
  const ComponentStatistics st = component_statistics(seeds, tau);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::fabs(st.mean[c]) < 4.0 * st.mean_stderr[c]);
    CHECK(std::fabs(st.cross[c]) < 4.0 * st.cross_stderr[c]);
  }
  CHECK(std::fabs(st.variance - field_correlator(0.0, tau)) < 4.0 * st.variance_stderr);
  CHECK_THROWS_AS(autocorrelation_estimate({1, 2, 3}, {0.0}, tau), DomainError);
}
