#pragma once

// Orbit-averaged energy balance per beta^2: gain from the vacuum field,
// radiative loss, their sum, and the eccentric (kappa -> 0) limits with and
// without the -d/(2 r^2) potential.

#include "sedlab/kepler.hpp"
#include "sedlab/quadrature.hpp"

namespace sedlab {

struct RateBreakdown {
  double gain_rate = 0.0;
  double loss_rate = 0.0;
  double total_rate = 0.0;
  double delta_per_period = 0.0;
};

// Default accuracy used for f(kappa).
QuadratureSpec field_gain_spec();

// f(kappa) for 0 < kappa <= 1, from the anomaly double integral of the d = 0
// integrand. Throws DomainError outside (0, 1], ConvergenceError if the
// quadrature does not reach the requested tolerance.
QuadResult field_gain_f_detailed(double kappa, const QuadratureSpec& spec = field_gain_spec());
double field_gain_f(double kappa);

// The kappa -> 0 limit as the scaled double integral over (u, v), and the
// closed form 16 / (5 pi sqrt 3).
QuadResult field_gain_f_limit(const QuadratureSpec& spec = {});
double f0_closed_form();
double f0_integrand(double u, double v);

// L_c = f(0) and r_c = f(0)^2 / 2.
double critical_angular_momentum();
double critical_pericentre();

// -k^8 [ (3-kappa^2)/(2 kappa^5) + d k^2 (5-3kappa^2)/kappa^7
//        + d^2 k^4 (35 - 30 kappa^2 + 3 kappa^4)/(8 kappa^9) ].
double radiative_loss(const OrbitParams& params);

// d = 0: gain from f(kappa). d != 0: circular orbits only (eps below
// kCircularEps); anything else throws DomainError.
RateBreakdown total_rate(const OrbitParams& params);
// d = 0 with a precomputed f(kappa).
RateBreakdown total_rate_with_f(const OrbitParams& params, double f);

// Circular total rates with the dipole term, lambda = sqrt(1 + d k^2).
double circular_total_rate_repulsive(double k, double d);      // d <= 0
double circular_total_rate_attractive(double k, double d);     // d >= 0, sum form
double circular_total_rate_attractive_product(double k, double d);
double circular_gain_rate(double k, double d);

// Energy change per period for d = 0 in the limit k -> 0 at fixed L.
double per_period_delta_d0(double L);

// Eccentric limit with dipole term, mu^2 = 1 + d kbar^2.
// h(x, y) including the regulator; short-lag series below the guard.
double eccentric_gain_integrand(double mu, double x, double y);
// Regulator alone, 64 (1-mu^2) x / (3 (1+x^2)^5 (x-y)(x-y+1)).
double eccentric_regulator(double mu, double x, double y);
QuadratureSpec eccentric_gain_spec();
QuadResult G_of_mu_detailed(double mu, const QuadratureSpec& spec = eccentric_gain_spec());
double G_of_mu(double mu);
double H_from_G(double mu, double G);
double H_of_mu(double mu);
// Asymptotes for large mu.
double G_large_mu(double mu);
double H_large_mu(double mu);

// Per-period change from G and kbar (sum form) and from H (factored form).
double per_period_delta_kbar(double kbar, double d, double G);
double per_period_delta_factored(double mu, double d, double H);
// Both of the above after computing G(mu); (mu, d) must admit kbar > 0.
double per_period_delta_dipole(double mu, double d);
// kbar = sqrt((mu^2 - 1)/d); throws DomainError for inconsistent pairs.
double kbar_from_mu(double mu, double d);

struct CriticalDipole {
  double d_c = 0.0;       // -H_sup^2
  double mu_at_sup = 0.0;
  double H_sup = 0.0;
};
// Supremum of H over 0 <= mu <= 1: 64-point grid, then golden-section
// refinement around the best grid point.
CriticalDipole critical_dipole_strength(int grid_points = 64);

}  // namespace sedlab
