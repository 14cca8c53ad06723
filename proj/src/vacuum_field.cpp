#include "sedlab/vacuum_field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <string>

#include "sedlab/error.hpp"
#include "sedlab/kepler.hpp"
#include "sedlab/parallel.hpp"

namespace sedlab {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on (0, 1]; built from raw engine bits so that streams are identical
// across standard libraries.
double uniform01(std::mt19937_64& g) { return (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53; }

// Smallest 2^a 3^b 5^c that is >= n and even.
std::size_t good_fft_size(std::size_t n) {
  std::size_t best = 2;
  while (best < n) best *= 2;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5)
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v *= 2;
      if (v % 2 == 0 && v < best) best = v;
    }
  return best;
}

struct SeedStats {
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  void add(double x) {
    sum += x;
    sum2 += x * x;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum2 - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

}  // namespace

double spectral_density(double omega, double tau_c) {
  if (!(omega >= 0.0)) return 0.0;
  return omega * omega * omega * std::exp(-omega * tau_c) / kPi;
}

double field_correlator(double lag, double tau_c) {
  const std::complex<double> z(lag, tau_c);
  const std::complex<double> z2 = z * z;
  return 6.0 / kPi * std::real(1.0 / (z2 * z2));
}

double FieldRealization::period() const { return 2.0 * kPi / d_omega; }

int minimum_modes(double tau_c, double duration) {
  if (!(tau_c > 0.0) || !(duration > 0.0)) throw DomainError("field: tau_c and duration must be positive");
  const double omega_max = kOmegaMaxTau / tau_c;
  const double n = std::ceil(omega_max * duration / (2.0 * kPi));
  if (n > 2.0e9) throw DomainError("field: mode count exceeds 2e9");
  return std::max(1, static_cast<int>(n));
}

FieldRealization build_realization(std::uint64_t seed, double tau_c, double duration, int n_modes) {
  const int n_min = minimum_modes(tau_c, duration);
  if (n_modes == 0) n_modes = n_min;
  if (n_modes < n_min)
    throw DomainError("field: insufficient mode density, need at least " + std::to_string(n_min) + " modes");
  FieldRealization f;
  f.seed = seed;
  f.tau_c = tau_c;
  f.omega_max = kOmegaMaxTau / tau_c;
  f.duration = duration;
  f.n_modes = n_modes;
  f.d_omega = f.omega_max / n_modes;
  for (int c = 0; c < 3; ++c) {
    std::mt19937_64 g(splitmix64(seed * 3 + static_cast<std::uint64_t>(c)));
    auto& amp = f.amplitude[c];
    auto& ph = f.phase[c];
    amp.resize(n_modes);
    ph.resize(n_modes);
    for (int n = 0; n < n_modes; ++n) {
      const double var = 2.0 * spectral_density(f.frequency(n), tau_c) * f.d_omega;
      amp[n] = std::sqrt(-var * std::log(uniform01(g)));
      ph[n] = 2.0 * kPi * uniform01(g);
    }
  }
  return f;
}

Vec3 evaluate(const FieldRealization& field, double t) {
  if (!(t >= 0.0 && t <= field.duration)) throw DomainError("field: time outside the synthesized window");
  Vec3 e{};
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int n = 0; n < field.n_modes; ++n) s += field.amplitude[c][n] * std::cos(field.frequency(n) * t + field.phase[c][n]);
    e[c] = s;
  }
  return e;
}

SampledField::SampledField(const FieldRealization& field, int points_per_tau) {
  if (points_per_tau < 4) throw DomainError("field: need at least 4 grid points per tau_c");
  period_ = field.period();
  const double by_resolution = std::ceil(period_ * points_per_tau / field.tau_c);
  const std::size_t need = std::max<std::size_t>(2 * static_cast<std::size_t>(field.n_modes) + 2,
                                                 static_cast<std::size_t>(by_resolution));
  m_ = good_fft_size(need);
  h_ = period_ / static_cast<double>(m_);
  const std::size_t nc = m_ / 2 + 1;

  fftw_complex* spec = fftw_alloc_complex(nc);
  double* out = fftw_alloc_real(m_);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(m_), spec, out, FFTW_ESTIMATE);
  }
  // y_j = sum_n X_n exp(2 pi i n j / m) with Hermitian completion, so
  // X_n = A e^{i phase} / 2 reproduces sum_n A cos(w_n t_j + phase).
  auto run = [&](int c, int kind, std::vector<double>& dst) {
    std::fill(reinterpret_cast<double*>(spec), reinterpret_cast<double*>(spec) + 2 * nc, 0.0);
    for (int n = 0; n < field.n_modes; ++n) {
      const double w = field.frequency(n);
      std::complex<double> x = std::polar(0.5 * field.amplitude[c][n], field.phase[c][n]);
      if (kind == 1) x *= std::complex<double>(0.0, w);
      if (kind == 2) x /= std::complex<double>(0.0, w);
      if (kind == 3) x /= -w * w;
      spec[n + 1][0] = x.real();
      spec[n + 1][1] = x.imag();
    }
    fftw_execute_dft_c2r(plan, spec, out);
    dst.assign(out, out + m_);
  };
  for (int c = 0; c < 3; ++c) {
    run(c, 0, e_[c]);
    run(c, 1, de_[c]);
    run(c, 2, prim_[c]);
    run(c, 3, prim2_[c]);
  }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(spec);
  fftw_free(out);
}

namespace {

inline double hermite(double y0, double y1, double d0, double d1, double s, double h) {
  const double s2 = s * s, s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 +
         (s3 - s2) * h * d1;
}

}  // namespace

Vec3 SampledField::field(double t) const {
  double u = std::fmod(t, period_);
  if (u < 0.0) u += period_;
  const double x = u / h_;
  std::size_t j = static_cast<std::size_t>(x);
  if (j >= m_) j = m_ - 1;
  const double s = x - static_cast<double>(j);
  const std::size_t j1 = j + 1 == m_ ? 0 : j + 1;
  Vec3 r;
  for (int c = 0; c < 3; ++c) r[c] = hermite(e_[c][j], e_[c][j1], de_[c][j], de_[c][j1], s, h_);
  return r;
}

Vec3 SampledField::primitive(double t) const {
  double u = std::fmod(t, period_);
  if (u < 0.0) u += period_;
  const double x = u / h_;
  std::size_t j = static_cast<std::size_t>(x);
  if (j >= m_) j = m_ - 1;
  const double s = x - static_cast<double>(j);
  const std::size_t j1 = j + 1 == m_ ? 0 : j + 1;
  Vec3 r;
  for (int c = 0; c < 3; ++c) r[c] = hermite(prim_[c][j], prim_[c][j1], e_[c][j], e_[c][j1], s, h_);
  return r;
}

Vec3 SampledField::second_primitive(double t) const {
  double u = std::fmod(t, period_);
  if (u < 0.0) u += period_;
  const double x = u / h_;
  std::size_t j = static_cast<std::size_t>(x);
  if (j >= m_) j = m_ - 1;
  const double s = x - static_cast<double>(j);
  const std::size_t j1 = j + 1 == m_ ? 0 : j + 1;
  Vec3 r;
  for (int c = 0; c < 3; ++c) r[c] = hermite(prim2_[c][j], prim2_[c][j1], prim_[c][j], prim_[c][j1], s, h_);
  return r;
}

std::vector<LagEstimate> autocorrelation_estimate(const std::vector<std::uint64_t>& seeds,
                                                  const std::vector<double>& lags, double tau_c,
                                                  const FieldCheckOptions& options) {
  if (seeds.size() < 100) throw DomainError("autocorrelation_estimate: need at least 100 seeds");
  const double duration = options.duration_over_tau * tau_c;
  std::vector<std::vector<double>> per_seed(seeds.size(), std::vector<double>(lags.size()));
  parallel_for(seeds.size(), [&](std::size_t i) {
    const FieldRealization f = build_realization(seeds[i], tau_c, duration);
    const SampledField s(f, options.points_per_tau);
    // Time average over one full period of the periodic realization.
    for (std::size_t l = 0; l < lags.size(); ++l) {
      double acc = 0.0;
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double t = s.step() * static_cast<double>(j);
        const Vec3 e1 = s.field(t + lags[l]);
        for (int c = 0; c < 3; ++c) acc += s.node(c, j) * e1[c];
      }
      per_seed[i][l] = acc / (3.0 * static_cast<double>(s.size()));
    }
  });
  std::vector<LagEstimate> out(lags.size());
  for (std::size_t l = 0; l < lags.size(); ++l) {
    SeedStats st;
    for (const auto& row : per_seed) st.add(row[l]);
    out[l] = {lags[l], st.mean(), st.stderr_of_mean(), field_correlator(lags[l], tau_c)};
  }
  return out;
}

ComponentStatistics component_statistics(const std::vector<std::uint64_t>& seeds, double tau_c,
                                         const FieldCheckOptions& options) {
  if (seeds.size() < 2) throw DomainError("component_statistics: need at least two seeds");
  const double duration = options.duration_over_tau * tau_c;
  struct Row {
    Vec3 at_zero{};
    Vec3 cross{};
    double var = 0.0;
  };
  std::vector<Row> rows(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    const FieldRealization f = build_realization(seeds[i], tau_c, duration);
    const SampledField s(f, options.points_per_tau);
    Row r;
    for (int c = 0; c < 3; ++c) r.at_zero[c] = s.node(c, 0);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double x = s.node(0, j), y = s.node(1, j), z = s.node(2, j);
      r.cross[0] += x * y;
      r.cross[1] += y * z;
      r.cross[2] += z * x;
      r.var += x * x + y * y + z * z;
    }
    const double m = static_cast<double>(s.size());
    for (int c = 0; c < 3; ++c) r.cross[c] /= m;
    r.var /= 3.0 * m;
    rows[i] = r;
  });
  ComponentStatistics out;
  for (int c = 0; c < 3; ++c) {
    SeedStats a, b;
    for (const auto& r : rows) {
      a.add(r.at_zero[c]);
      b.add(r.cross[c]);
    }
    out.mean[c] = a.mean();
    out.mean_stderr[c] = a.stderr_of_mean();
    out.cross[c] = b.mean();
    out.cross_stderr[c] = b.stderr_of_mean();
  }
  SeedStats v;
  for (const auto& r : rows) v.add(r.var);
  out.variance = v.mean();
  out.variance_stderr = v.stderr_of_mean();
  return out;
}

}  // namespace sedlab
