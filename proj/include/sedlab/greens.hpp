#pragma once

// Linear response of a bound orbit to a small force, written on the comoving
// basis (e1 radial, e2 tangential, e3 along L). Everything is parametrized by
// eccentric anomalies: a for the observation time t, b for the source time s.

#include <array>

#include "sedlab/kepler.hpp"
#include "sedlab/vec3.hpp"

namespace sedlab {

// The six homogeneous solutions of the comoving perturbation equations at one
// anomaly. h[1] and h[3] (zero based) carry secular parts growing with tau_a
// and phi_a; their periodic remainders are kept separately so that Green's
// matrices can difference the secular pieces exactly.
struct HomogeneousBasis {
  std::array<Vec3, 6> h{};      // h^(1) .. h^(6)
  std::array<Vec3, 6> dh_da{};  // d h^(i) / d a
  Vec3 h2_periodic{};           // h^(2) - 3 eps tau_a h^(1)
  Vec3 h4_periodic{};           // h^(4) - eps (mu^2-1)/(kappa mu) phi_a h^(3)
  double secular_tau = 0.0;     // tau_a
  double secular_phi = 0.0;     // phi_a
  double rho = 1.0;
};

HomogeneousBasis homogeneous_solutions(const OrbitParams& params, double a);

struct GreensEval {
  Mat3 gamma{};      // Gamma(t, s) on the comoving bases
  Mat3 gamma_dot{};  // d/dt Gamma(t, s)
  double g = 0.0;    // tr_3d G(t, s)
  double gdot = 0.0; // d/dt tr_3d G(t, s) - 3
  double g33 = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Exact Green's matrix. Orbits with eps below kCircularEps use the analytic
// eps -> 0 limit of the paired products.
GreensEval greens_matrix(const OrbitParams& params, double a, double b);
inline constexpr double kCircularEps = 1e-6;

// tr_3d G assembled from Gamma and the rotation between the two comoving frames.
double trace_g(const OrbitParams& params, double a, double b);

// Compact d = 0 form  k^3 tr G = [A + B tau_ab] / (rho_a rho_b).
double compact_A(double a, double b, double eps);
double compact_B(double a, double b, double eps);
double trace_g_compact(const OrbitParams& params, double a, double b);

// d/dt tr_3d G(t, s) - 3, evaluated directly (no short-lag series).
double gdot_subtracted(const OrbitParams& params, double a, double b);

// g_sub(t, s) = -d (t - s)^2 / (2 r(t)^4); lag = t - s in Bohr time.
double regulator_subtraction(const OrbitParams& params, double a, double lag);

// Leading short-lag coefficients of gdot in powers of the time lag u = t - s:
// gdot = c2 u^2 + c3 u^3 + O(u^4), with c2 = d/(2 r^4) and
// c3 = 2 d eps sin a / (3 k r^6). Both vanish for d = 0.
struct ShortLagCoefficients {
  double c2 = 0.0;
  double c3 = 0.0;
};
ShortLagCoefficients short_lag_coefficients(const OrbitParams& params, double a);

// Taylor coefficients of gdot(a, a - h) in the anomaly lag h, computed as a
// truncated series (no cancellation). coefficient[n] multiplies h^n.
std::array<double, 20> gdot_anomaly_series(const OrbitParams& params, double a);

// The field-gain integrand rho_a rho_b gdot / tau_ab^4 for d = 0, switching
// to its short-lag series for |a - b| below diagonal_guard(params, a).
// Evaluated in long double, or in quad precision for kappa below
// kQuadPrecisionKappa where the cancellation near pericentre is severe.
double field_gain_integrand(const OrbitParams& params, double a, double b);
double diagonal_guard(const OrbitParams& params, double a);
inline constexpr double kQuadPrecisionKappa = 0.1;

}  // namespace sedlab
