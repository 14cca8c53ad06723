#include "sedlab/kepler.hpp"

#include <cmath>
#include <string>

#include "sedlab/error.hpp"

namespace sedlab {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

OrbitParams finish(double k, double eps, double kappa, double lambda, double d, double chi) {
  OrbitParams p;
  p.k = k;
  p.eps = eps;
  p.kappa = kappa;
  p.lambda = lambda;
  p.L = lambda / k;
  p.d = d;
  p.delta = d * k * k;
  p.mu = lambda / kappa;
  p.chi = chi;
  return p;
}

}  // namespace

OrbitParams OrbitParams::from_energy(double k, double eps, double d, double chi) {
  if (!(k > 0.0)) throw DomainError("orbit: k must be positive");
  if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("orbit: eccentricity must lie in [0, 1)");
  const double kappa = std::sqrt((1.0 - eps) * (1.0 + eps));
  const double lambda2 = kappa * kappa + d * k * k;
  if (!(lambda2 > 0.0))
    throw DomainError("orbit: kappa^2 + d k^2 must be positive (spiralling orbits are not supported)");
  return finish(k, eps, kappa, std::sqrt(lambda2), d, chi);
}

OrbitParams OrbitParams::from_angular_momentum(double k, double L, double d, double chi) {
  if (!(k > 0.0)) throw DomainError("orbit: k must be positive");
  if (!(L > 0.0)) throw DomainError("orbit: L must be positive");
  const double lambda = k * L;
  const double kappa2 = lambda * lambda - d * k * k;
  if (!(kappa2 > 0.0)) throw DomainError("orbit: L^2 must exceed d");
  if (kappa2 > 1.0 + 1e-14) throw DomainError("orbit: (k L)^2 - d k^2 exceeds 1, no bound orbit");
  const double kappa = std::sqrt(std::fmin(kappa2, 1.0));
  const double eps = std::sqrt(std::fmax(0.0, 1.0 - kappa * kappa));
  return finish(k, eps, kappa, lambda, d, chi);
}

double solve_eccentric_anomaly(double tau, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("kepler: eccentricity must lie in [0, 1)");
  // Reduce to [-pi, pi); the root of a - eps sin a = m stays in the same interval.
  const double n = std::floor((tau + kPi) / kTwoPi);
  const double m = tau - kTwoPi * n;
  if (m == 0.0) return kTwoPi * n;

  double lo = -kPi, hi = kPi;
  double a = m;
  const double tol = 1e-15 * (1.0 + std::fabs(m));
  for (int it = 0; it < 100; ++it) {
    const double f = a - eps * std::sin(a) - m;
    if (std::fabs(f) <= tol) return a + kTwoPi * n;
    if (f > 0.0)
      hi = a;
    else
      lo = a;
    const double fp = 1.0 - eps * std::cos(a);
    double next = a - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == a) return a + kTwoPi * n;
    a = next;
  }
  throw ConvergenceError("kepler: eccentric anomaly iteration did not converge at eps=" +
                             std::to_string(eps),
                         a + kTwoPi * n);
}

double true_anomaly(double a, const OrbitParams& params) {
  const double n = std::floor((kPi + a) / kTwoPi);
  const double ar = a - kTwoPi * n;  // in [-pi, pi)
  const double half = 0.5 * ar;
  // arctan(q tan(a/2)) written with atan2 so that a = +-pi needs no special case.
  const double q = (1.0 + params.eps) / params.kappa;
  const double principal = std::atan2(q * std::sin(half), std::cos(half));
  return 2.0 * params.mu * (principal + kPi * n);
}

double angle_difference(double a, double b, const OrbitParams& params) {
  const double h = 0.5 * (a - b);
  const double principal =
      2.0 * params.mu *
      std::atan2(params.kappa * std::sin(h), std::cos(h) - params.eps * std::cos(0.5 * (a + b)));
  const double direct = true_anomaly(a, params) - true_anomaly(b, params);
  const double turn = kTwoPi * params.mu;
  return principal + turn * std::round((direct - principal) / turn);
}

RotationKinematics rotation_kinematics(double a, double b, double eps) {
  const double kappa = std::sqrt((1.0 - eps) * (1.0 + eps));
  const double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  const double den = (1.0 - eps * ca) * (1.0 - eps * cb);
  RotationKinematics r;
  r.cos_dphi = (std::cos(a - b) - eps * (ca + cb) + eps * eps * (1.0 - sa * sb)) / den;
  r.sin_dphi = kappa * (std::sin(a - b) - eps * (sa - sb)) / den;
  return r;
}

RotationKinematics rotation_kinematics(double a, double b, const OrbitParams& params) {
  if (std::fabs(params.mu - 1.0) > 1e-12)
    throw DomainError("rotation_kinematics: closed form requires mu = 1 (d = 0)");
  return rotation_kinematics(a, b, params.eps);
}

AnomalyState orbit_state(const OrbitParams& params, double a) {
  const double k = params.k, eps = params.eps;
  AnomalyState s;
  s.a = a;
  s.tau = a - eps * std::sin(a);
  s.rho = 1.0 - eps * std::cos(a);
  s.phi = true_anomaly(a, params);
  s.r = s.rho / (k * k);
  s.rdot = k * eps * std::sin(a) / s.rho;
  s.t = s.tau / (k * k * k);
  return s;
}

Vec3 orbit_position(const OrbitParams& params, double a) {
  const AnomalyState s = orbit_state(params, a);
  const double th = params.chi + s.phi;
  return {s.r * std::cos(th), s.r * std::sin(th), 0.0};
}

Vec3 orbit_velocity(const OrbitParams& params, double a) {
  const AnomalyState s = orbit_state(params, a);
  const double th = params.chi + s.phi;
  const double vt = params.L / s.r;  // r dphi/dt
  return {s.rdot * std::cos(th) - vt * std::sin(th), s.rdot * std::sin(th) + vt * std::cos(th), 0.0};
}

}  // namespace sedlab
