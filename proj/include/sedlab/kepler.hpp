#pragma once

// Bound orbits of the potential V(r) = -1/r - d/(2 r^2) in Bohr units,
// parametrized by the eccentric anomaly a:
//   k^2 r = 1 - eps cos a,   k^3 t = a - eps sin a.

#include "sedlab/vec3.hpp"

namespace sedlab {

inline constexpr double kPi = 3.14159265358979323846;

// Conserved descriptors of one unperturbed orbit. Construct through the
// factories, which enforce the coupling relations
//   kappa^2 + eps^2 = 1,  lambda = k L,  lambda^2 = kappa^2 + d k^2,  mu = lambda / kappa.
struct OrbitParams {
  double k = 1.0;       // energy scale, E = -k^2/2
  double eps = 0.0;     // eccentricity in [0, 1)
  double kappa = 1.0;   // sqrt(1 - eps^2)
  double L = 1.0;       // angular momentum
  double lambda = 1.0;  // k L
  double d = 0.0;       // strength of the -d/(2 r^2) potential
  double delta = 0.0;   // d k^2
  double mu = 1.0;      // lambda / kappa = L / sqrt(L^2 - d)
  double chi = 0.0;     // orientation of the pericentre in the orbital plane

  static OrbitParams from_energy(double k, double eps, double d = 0.0, double chi = 0.0);
  static OrbitParams from_angular_momentum(double k, double L, double d = 0.0, double chi = 0.0);

  double energy() const { return -0.5 * k * k; }
  double period() const { return 2.0 * kPi / (k * k * k); }
  double pericentre() const { return (1.0 - eps) / (k * k); }
  double apocentre() const { return (1.0 + eps) / (k * k); }
  double effective_angular_momentum() const { return kappa / k; }
};

// One point of the orbit.
struct AnomalyState {
  double a = 0.0;     // eccentric anomaly
  double tau = 0.0;   // a - eps sin a
  double rho = 1.0;   // 1 - eps cos a = d tau / d a
  double phi = 0.0;   // true anomaly measured from pericentre, unwound
  double r = 1.0;
  double rdot = 0.0;
  double t = 0.0;     // time since pericentre passage at a = 0
};

// Inverts tau = a - eps sin a. Safeguarded Newton; throws ConvergenceError if
// the iteration cap is hit.
double solve_eccentric_anomaly(double tau, double eps);

AnomalyState orbit_state(const OrbitParams& params, double a);

// phi_a = 2 mu [arctan((1+eps)/kappa tan(a/2)) + pi floor((pi + a)/(2 pi))].
double true_anomaly(double a, const OrbitParams& params);

// phi_a - phi_b from the arctangent sum rule, continued onto the branch of the
// unwound true anomaly. Accurate for small a - b.
double angle_difference(double a, double b, const OrbitParams& params);

struct RotationKinematics {
  double cos_dphi = 1.0;
  double sin_dphi = 0.0;
};

// Closed forms of cos/sin(phi_a - phi_b) valid for mu = 1 only.
RotationKinematics rotation_kinematics(double a, double b, double eps);
// Same, rejecting parameter sets with mu != 1.
RotationKinematics rotation_kinematics(double a, double b, const OrbitParams& params);

// Cartesian position and velocity at anomaly a; the orbit lies in the x-y plane
// with angular momentum along +z.
Vec3 orbit_position(const OrbitParams& params, double a);
Vec3 orbit_velocity(const OrbitParams& params, double a);

}  // namespace sedlab
