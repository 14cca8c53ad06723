#pragma once

// Seeded spectral synthesis of the zero-point field in the dipole
// approximation. Each Cartesian component is an independent stationary
// Gaussian process with correlator
//   C(u) = (6/pi) Re (u + i tau_c)^-4,
// whose one-sided spectral density is S(w) = w^3 exp(-w tau_c) / pi.

#include <array>
#include <cstdint>
#include <vector>

#include "sedlab/vec3.hpp"

namespace sedlab {

inline constexpr double kOmegaMaxTau = 30.0;  // omega_max = 30 / tau_c

double spectral_density(double omega, double tau_c);
double field_correlator(double lag, double tau_c);

// Mode table. Mode n (zero based) sits at frequency (n + 1) d_omega; the
// realization is periodic with period 2 pi / d_omega >= duration.
struct FieldRealization {
  std::uint64_t seed = 0;
  double tau_c = 0.0;
  double omega_max = 0.0;
  double duration = 0.0;
  double d_omega = 0.0;
  int n_modes = 0;
  std::array<std::vector<double>, 3> amplitude;
  std::array<std::vector<double>, 3> phase;

  double frequency(int n) const { return (n + 1) * d_omega; }
  double period() const;
};

// Smallest mode count with spacing <= 2 pi / duration.
int minimum_modes(double tau_c, double duration);

// Amplitudes are Rayleigh distributed with <A^2> = 2 S(w) dw and phases
// uniform, i.e. independent Gaussian quadratures of variance S(w) dw.
// n_modes = 0 picks minimum_modes. Throws DomainError when n_modes is below it.
FieldRealization build_realization(std::uint64_t seed, double tau_c, double duration, int n_modes = 0);

// Direct mode sum; t must lie in [0, duration].
Vec3 evaluate(const FieldRealization& field, double t);

// The realization resampled by FFT onto a uniform grid over one period, with
// E, dE/dt and the zero-mean first and second primitives stored per node. Between nodes
// cubic Hermite interpolation is used. Valid for any t (periodic).
class SampledField {
 public:
  explicit SampledField(const FieldRealization& field, int points_per_tau = 16);

  Vec3 field(double t) const;
  // Zero-mean antiderivative of the field: the velocity a free unit charge
  // would pick up.
  Vec3 primitive(double t) const;
  // Zero-mean antiderivative of primitive(): the free-charge displacement.
  Vec3 second_primitive(double t) const;
  double step() const { return h_; }
  double period() const { return period_; }
  std::size_t size() const { return m_; }
  // Node values, for estimators that work directly on the grid.
  double node(int component, std::size_t j) const { return e_[component][j]; }

 private:
  double h_ = 0.0;
  double period_ = 0.0;
  std::size_t m_ = 0;
  std::array<std::vector<double>, 3> e_, de_, prim_, prim2_;
};

struct LagEstimate {
  double lag = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double exact = 0.0;
};

struct FieldCheckOptions {
  double duration_over_tau = 64.0;  // window length per realization
  int points_per_tau = 8;
};

// Ensemble estimate of <E_i(t) E_i(t + lag)>, averaged over the three
// components and over all grid times in each realization's window. The
// standard error comes from the spread of per-seed averages. Needs >= 100 seeds.
std::vector<LagEstimate> autocorrelation_estimate(const std::vector<std::uint64_t>& seeds,
                                                  const std::vector<double>& lags, double tau_c,
                                                  const FieldCheckOptions& options = {});

struct ComponentStatistics {
  std::array<double, 3> mean{};         // time-and-ensemble mean per component
  std::array<double, 3> mean_stderr{};
  std::array<double, 3> cross{};        // <E_x E_y>, <E_y E_z>, <E_z E_x> at equal times
  std::array<double, 3> cross_stderr{};
  double variance = 0.0;                // <E_i^2>, averaged over components
  double variance_stderr = 0.0;
};
ComponentStatistics component_statistics(const std::vector<std::uint64_t>& seeds, double tau_c,
                                         const FieldCheckOptions& options = {});

}  // namespace sedlab
