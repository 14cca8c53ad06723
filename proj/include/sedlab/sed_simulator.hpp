#pragma once

// Stochastic trajectories of  x'' = f(x) - beta E(t) + beta^2 x''',
// f = -x/r^3 - d x/r^4, with the radiation reaction reduced to
// x''' ~ (df/dx) x' along the motion.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sedlab/kepler.hpp"
#include "sedlab/vec3.hpp"

namespace sedlab {

struct SimConfig {
  double beta = 0.05;
  double d = 0.0;
  double tau_c = 0.05;
  double dt_base = 0.02;        // step ceiling is dt_base * r^(3/2)
  double t_max = 100.0;
  std::uint64_t seed = 1;
  OrbitParams initial = OrbitParams::from_energy(1.0, 0.0);
  double initial_anomaly = 0.0;
  double ionisation_r = 50.0;
  double ionisation_window = 5.0;
  double sample_interval = 0.1;
  double rel_tol = 1e-10;       // embedded error control, per step
  double abs_tol = 1e-12;
  int points_per_tau = 16;      // field grid resolution
  bool field = true;            // include -beta E
  bool damping = true;          // include beta^2 (df/dx) v
  bool stop_on_ionisation = true;
};

// Warns (returns a message) for beta > 0.1; throws DomainError for invalid fields.
std::string validate(const SimConfig& config);

struct TrajectorySample {
  double t = 0.0;
  Vec3 r{};
  Vec3 v{};
  double energy = 0.0;
  double L = 0.0;
};

struct Histogram {
  double lo = 0.0;
  double hi = 3.0;
  std::vector<double> weight;
  double bin_width() const { return (hi - lo) / static_cast<double>(weight.size()); }
  double total() const;
  // Weight in bins lying entirely below x plus the pro-rata part of the bin containing x.
  double weight_below(double x) const;
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  std::optional<double> ionised_at;
  Histogram L_histogram;  // dwell-time weighted, up to ionisation or t_max
  long steps = 0;
  long rejected = 0;
  bool underflow = false;  // step size collapsed near r = 0; trajectory is partial
};

double orbital_energy(const Vec3& r, const Vec3& v, double d);

Vec3 force(const Vec3& r, double d);
// d/dt f(r(t)) for motion with velocity v.
Vec3 force_rate(const Vec3& r, const Vec3& v, double d);
// Jacobian df/dr.
Mat3 force_jacobian(const Vec3& r, double d);

Histogram make_histogram(int bins = 60, double lo = 0.0, double hi = 3.0);

TrajectoryRecord integrate(const SimConfig& config);
std::vector<TrajectoryRecord> integrate_ensemble(const SimConfig& config, const std::vector<std::uint64_t>& seeds);

// First sample time t with E > 0 on every sample of [t - window, t], r > r_ion
// and r . v > 0.
std::optional<double> detect_self_ionisation(const TrajectoryRecord& record, const SimConfig& config);

struct FrozenGainOptions {
  int memory_periods = 2;   // response starts this long before each window
  int window_periods = 1;
  int segments = 8;         // consecutive windows per seed
  int steps_per_tau = 8;
  // Modes below low_band times the pericentre angular rate k^3 / (1 - eps)^(3/2)
  // are averaged exactly over their phase instead of being sampled.
  double low_band = 8.0;
  // Low-band frequency grid: this many points per 2 pi / (segment length).
  int low_band_oversample = 8;
};

struct GainMeasurement {
  double rate = 0.0;    // per beta^2
  double stderr_ = 0.0;
  int seeds = 0;
  double low_band_part = 0.0;  // included in rate
};

// <E . r1'> for the first-order response r1'' = (df/dr) r1 + E about the
// frozen orbit, averaged over whole periods and seeds. Each segment starts
// r1 on the free-charge response (second and first primitives of E), writes
// r1 = Q + w and integrates the smooth remainder w'' = (df/dr)(Q + w); the
// estimator is E . w', since E . Q' = d/dt(Q'^2 / 2) has zero mean.
// Response to the field older than memory_periods is kept only in its
// free-charge part.
//
// Distinct modes are independent, so the mean splits into a sum over modes.
// The low band (resonant with the orbit: large, nearly cancelling
// fluctuations) is evaluated per mode with its two quadratures; the rest is
// sampled with n_seeds realizations, which is where the stderr comes from.
GainMeasurement frozen_orbit_gain(const SimConfig& config, const OrbitParams& params, int n_seeds,
                                  const FrozenGainOptions& options = {});

// Mean dE/dt per beta^2 from a damping-only integration over whole periods.
double measured_damping_rate(const OrbitParams& params, double beta, int periods = 1);

struct PositroniumMapping {
  double m1 = 0.0, m2 = 0.0, q1 = 0.0, q2 = 0.0;
  double Q = 0.0;          // total charge
  double qbar = 0.0;       // (m2 q1 - m1 q2) / M
  double M = 0.0;          // total mass
  double mu_reduced = 0.0;
  bool centre_of_mass_coupled = false;  // Q != 0: outside the validated regime
};

// Throws DomainError for non-positive masses.
PositroniumMapping map_positronium(double m1, double m2, double q1, double q2);

}  // namespace sedlab
