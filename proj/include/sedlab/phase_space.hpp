#pragma once

// Ground state of the -1/r - d/(2 r^2) problem and the conjectured classical
// phase-space density built from it, as a function of R = -1/E and
// L_eff = sqrt(L^2 - d).

#include <utility>
#include <vector>

#include "sedlab/quadrature.hpp"

namespace sedlab {

struct GroundStateParams {
  double d = 0.0;
  double ell0 = 0.0;  // -1/2 + sqrt(1 - 4 d) / 2
  double E0 = -0.5;   // -1 / (2 (1 + ell0)^2)
  double C = 0.0;     // normalization of density_Ppr

  // Throws DomainError for d > 1/4.
  static GroundStateParams from_d(double d);
};

// A momentum-space point at radius r, parametrized by R and the angle
// angle_m in [0, pi]:
//   p_r = sqrt(2 (R - r) / (r R)) cos(angle_m),
//   L_eff = sqrt(2 r (R - r) / R) sin(angle_m).
struct PhaseSpacePoint {
  double r = 0.0;
  double R = 0.0;
  double Leff = 0.0;
  double p_r = 0.0;
  double angle_m = 0.0;

  // Throws DomainError unless R > r > 0 and 0 <= angle_m <= pi.
  static PhaseSpacePoint at(double r, double R, double angle_m);
};

double psi0(double r, const GroundStateParams& gs);

// C (L_eff^2 R)^(2 ell0) L_eff R^3 exp(-2 R / (1 + ell0)). Throws DomainError
// unless R > r > 0.
double density_Ppr(const PhaseSpacePoint& point, const GroundStateParams& gs);

// Momentum-space marginal int dV_p P_pr at radius r, dV_p = dR d(angle_m) dnu L_eff / (r R^2):
// the closed form, and direct 2d quadrature over (R, angle_m).
double momentum_marginal(double r, const GroundStateParams& gs);
QuadResult momentum_marginal_quadrature(double r, const GroundStateParams& gs, double rel_tol = 1e-10);

// Densities of the conserved quantities, in dE dL_eff and dE dkappa with
// kappa = sqrt(2 |E|) L_eff. Throw DomainError unless E < 0, L_eff >= 0 and
// kappa <= 1.
double dist_E_Leff(double E, double Leff, const GroundStateParams& gs);
double dist_E_kappa(double E, double kappa, const GroundStateParams& gs);

// Marginal density of L at d = 0: int dE P_{E L} over |E| <= 1/(2 L^2),
// which is L^2 Gamma(7/2, 4 L^2).
double conjecture_L_density(double L);
// Integral of conjecture_L_density over [0, L].
double conjecture_L_cdf(double L);
// (L, density) over the grid; gs must have d = 0.
std::vector<std::pair<double, double>> conjecture_L_curve(const std::vector<double>& L_grid,
                                                          const GroundStateParams& gs);

}  // namespace sedlab
