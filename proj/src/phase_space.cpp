#include "sedlab/phase_space.hpp"

#include <cmath>

#include "sedlab/error.hpp"
#include "sedlab/kepler.hpp"

namespace sedlab {

namespace {

// Gamma(s, z) for s = 1/2 + n by upward recursion from Gamma(1/2, z) = sqrt(pi) erfc(sqrt z).
double upper_gamma_half(int n, double z) {
  double g = std::sqrt(kPi) * std::erfc(std::sqrt(z));
  double s = 0.5;
  for (int i = 0; i < n; ++i) {
    g = s * g + std::pow(z, s) * std::exp(-z);
    s += 1.0;
  }
  return g;
}

}  // namespace

GroundStateParams GroundStateParams::from_d(double d) {
  if (!(d <= 0.25)) throw DomainError("ground state: need d <= 1/4");
  GroundStateParams gs;
  gs.d = d;
  gs.ell0 = -0.5 + 0.5 * std::sqrt(1.0 - 4.0 * d);
  const double l = gs.ell0;
  gs.E0 = -1.0 / (2.0 * (1.0 + l) * (1.0 + l));
  gs.C = std::pow(2.0, 2.0 + 6.0 * l) / (kPi * kPi * kPi * std::pow(1.0 + l, 6.0 + 4.0 * l) * std::tgamma(3.0 + 4.0 * l));
  return gs;
}

PhaseSpacePoint PhaseSpacePoint::at(double r, double R, double angle_m) {
  if (!(r > 0.0) || !(R > r) || !std::isfinite(R)) throw DomainError("phase space: need R > r > 0");
  if (!(angle_m >= 0.0 && angle_m <= kPi)) throw DomainError("phase space: angle_m outside [0, pi]");
  PhaseSpacePoint p;
  p.r = r;
  p.R = R;
  p.angle_m = angle_m;
  p.p_r = std::sqrt(2.0 * (R - r) / (r * R)) * std::cos(angle_m);
  p.Leff = std::sqrt(2.0 * r * (R - r) / R) * std::sin(angle_m);
  return p;
}

double psi0(double r, const GroundStateParams& gs) {
  if (!(r > 0.0)) throw DomainError("psi0: need r > 0");
  const double l = gs.ell0;
  const double norm = std::pow(2.0, l) * std::pow(1.0 + l, -2.0 - l) / std::sqrt(kPi * std::tgamma(2.0 + 2.0 * l));
  return norm * std::pow(r, l) * std::exp(-r / (1.0 + l));
}

double density_Ppr(const PhaseSpacePoint& p, const GroundStateParams& gs) {
  if (!(p.r > 0.0) || !(p.R > p.r)) throw DomainError("density_Ppr: need R > r > 0");
  const double l = gs.ell0;
  return gs.C * std::pow(p.Leff * p.Leff * p.R, 2.0 * l) * p.Leff * p.R * p.R * p.R * std::exp(-2.0 * p.R / (1.0 + l));
}

double momentum_marginal(double r, const GroundStateParams& gs) {
  if (!(r > 0.0)) throw DomainError("momentum_marginal: need r > 0");
  const double l = gs.ell0;
  return gs.C * std::pow(kPi, 1.5) * std::pow(1.0 + l, 2.0 + 2.0 * l) * std::tgamma(1.5 + 2.0 * l) *
         std::pow(r, 2.0 * l) * std::exp(-2.0 * r / (1.0 + l));
}

QuadResult momentum_marginal_quadrature(double r, const GroundStateParams& gs, double rel_tol) {
  if (!(r > 0.0)) throw DomainError("momentum_marginal: need r > 0");
  QuadratureSpec outer;
  outer.rel_tol = rel_tol;
  outer.abs_tol = 1e-300;
  QuadratureSpec inner = outer;
  inner.rel_tol = 0.1 * rel_tol;
  long evaluations = 0;
  auto over_R = [&](double m) {
    auto f = [&](double R) {
      if (!(R > r)) return 0.0;
      const PhaseSpacePoint p = PhaseSpacePoint::at(r, R, m);
      return p.Leff / (r * R * R) * density_Ppr(p, gs);
    };
    const QuadResult q = integrate_1d(f, r, INFINITY, inner);
    evaluations += q.evaluations;
    return q.value;
  };
  QuadResult q = integrate_1d(over_R, 0.0, kPi, outer);
  q.value *= 2.0 * kPi;
  q.error *= 2.0 * kPi;
  q.evaluations += evaluations;
  return q;
}

double dist_E_Leff(double E, double Leff, const GroundStateParams& gs) {
  if (!(E < 0.0) || !(Leff >= 0.0)) throw DomainError("dist_E_Leff: need E < 0 and L_eff >= 0");
  const double a = -E;
  if (std::sqrt(2.0 * a) * Leff > 1.0 + 1e-12) throw DomainError("dist_E_Leff: kappa > 1");
  const double l = gs.ell0;
  const double c = std::pow(2.0, 4.5 + 6.0 * l) / (std::pow(1.0 + l, 6.0 + 4.0 * l) * std::tgamma(3.0 + 4.0 * l));
  return c * std::pow(Leff * Leff / a, 2.0 * l) * Leff * Leff * std::pow(a, -4.5) * std::exp(-2.0 / ((1.0 + l) * a));
}

double dist_E_kappa(double E, double kappa, const GroundStateParams& gs) {
  if (!(E < 0.0) || !(kappa >= 0.0) || kappa > 1.0) throw DomainError("dist_E_kappa: need E < 0 and 0 <= kappa <= 1");
  const double a = -E;
  const double l = gs.ell0;
  const double c = std::pow(2.0, 3.0 + 4.0 * l) / (std::pow(1.0 + l, 6.0 + 4.0 * l) * std::tgamma(3.0 + 4.0 * l));
  return c * std::pow(kappa, 2.0 + 4.0 * l) * std::pow(a, -6.0 - 4.0 * l) * std::exp(-2.0 / ((1.0 + l) * a));
}

double conjecture_L_density(double L) {
  if (!(L >= 0.0)) throw DomainError("conjecture_L_density: need L >= 0");
  return L * L * upper_gamma_half(3, 4.0 * L * L);
}

double conjecture_L_cdf(double L) {
  if (!(L >= 0.0)) throw DomainError("conjecture_L_cdf: need L >= 0");
  // Swap the order: int_0^inf dt t^(5/2) e^-t min(L, sqrt(t)/2)^3 / 3.
  const double z = 4.0 * L * L;
  double series = 0.0, term = 1.0;
  for (int j = 0; j <= 4; ++j) {
    series += term;
    term *= z / (j + 1);
  }
  const double lower5 = -std::expm1(-z) - std::exp(-z) * (series - 1.0);  // gamma(5, z) / 24
  return lower5 + L * L * L / 3.0 * upper_gamma_half(3, z);
}

std::vector<std::pair<double, double>> conjecture_L_curve(const std::vector<double>& L_grid,
                                                          const GroundStateParams& gs) {
  if (gs.d != 0.0) throw DomainError("conjecture_L_curve: defined for d = 0");
  std::vector<std::pair<double, double>> out;
  out.reserve(L_grid.size());
  for (double L : L_grid) out.emplace_back(L, conjecture_L_density(L));
  return out;
}

}  // namespace sedlab
