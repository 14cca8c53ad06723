#include "sedlab/sed_simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "sedlab/error.hpp"
#include "sedlab/parallel.hpp"
#include "sedlab/vacuum_field.hpp"

namespace sedlab {

namespace {

using State = std::array<double, 6>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

Vec3 pos(const State& y) { return {y[0], y[1], y[2]}; }
Vec3 vel(const State& y) { return {y[3], y[4], y[5]}; }

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [c, k] : terms)
    for (int i = 0; i < 6; ++i) out[i] += h * c * (*k)[i];
  return out;
}

TrajectorySample make_sample(double t, const State& y, double d) {
  TrajectorySample s;
  s.t = t;
  s.r = pos(y);
  s.v = vel(y);
  s.energy = orbital_energy(s.r, s.v, d);
  s.L = norm(cross(s.r, s.v));
  return s;
}

void add_to_histogram(Histogram& h, double x, double w) {
  if (!(x >= h.lo && x < h.hi)) return;
  const auto n = static_cast<std::size_t>((x - h.lo) / h.bin_width());
  if (n < h.weight.size()) h.weight[n] += w;
}

}  // namespace

double Histogram::total() const {
  double s = 0.0;
  for (double w : weight) s += w;
  return s;
}

double Histogram::weight_below(double x) const {
  double s = 0.0;
  const double bw = bin_width();
  for (std::size_t n = 0; n < weight.size(); ++n) {
    const double b0 = lo + bw * static_cast<double>(n), b1 = b0 + bw;
    if (b1 <= x)
      s += weight[n];
    else if (b0 < x)
      s += weight[n] * (x - b0) / bw;
  }
  return s;
}

Histogram make_histogram(int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw DomainError("histogram: need bins >= 1 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.weight.assign(static_cast<std::size_t>(bins), 0.0);
  return h;
}

double orbital_energy(const Vec3& r, const Vec3& v, double d) {
  const double rr = norm(r);
  return 0.5 * dot(v, v) - 1.0 / rr - 0.5 * d / (rr * rr);
}

Vec3 force(const Vec3& r, double d) {
  const double rr = norm(r);
  if (rr == 0.0) throw DomainError("force: r = 0");
  const double r3 = rr * rr * rr;
  return (-1.0 / r3 - d / (r3 * rr)) * r;
}

Vec3 force_rate(const Vec3& r, const Vec3& v, double d) {
  const double rr = norm(r), r2 = rr * rr, r3 = r2 * rr;
  const double rv = dot(r, v);
  const double c1 = -1.0 / r3 - d / (r3 * rr);
  const double c2r = 3.0 / (r3 * r2) + 4.0 * d / (r3 * r3);
  return c1 * v + (c2r * rv) * r;
}

Mat3 force_jacobian(const Vec3& r, double d) {
  const double rr = norm(r), r2 = rr * rr, r3 = r2 * rr;
  const double diag = -1.0 / r3 - d / (r3 * rr);
  const double outer = 3.0 / (r3 * r2) + 4.0 * d / (r3 * r3);
  Mat3 j{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) j[a][b] = (a == b ? diag : 0.0) + outer * r[a] * r[b];
  return j;
}

std::string validate(const SimConfig& c) {
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) throw DomainError("config: beta must be >= 0");
  if (!(c.tau_c > 0.0)) throw DomainError("config: tau_c must be positive");
  if (!(c.dt_base > 0.0)) throw DomainError("config: dt_base must be positive");
  if (!(c.t_max > 0.0)) throw DomainError("config: t_max must be positive");
  if (!(c.ionisation_r > 0.0) || !(c.ionisation_window >= 0.0))
    throw DomainError("config: ionisation thresholds must be positive");
  if (!(c.sample_interval > 0.0)) throw DomainError("config: sample_interval must be positive");
  if (!(c.rel_tol > 0.0) || !(c.abs_tol > 0.0)) throw DomainError("config: tolerances must be positive");
  if (c.beta > 0.1) return "beta > 0.1: outside the small-coupling regime";
  return {};
}

TrajectoryRecord integrate(const SimConfig& config) {
  validate(config);
  const double d = config.d, beta = config.beta;
  const bool use_field = config.field && beta > 0.0;
  const bool use_damping = config.damping && beta > 0.0;

  std::optional<SampledField> field;
  if (use_field) {
    const FieldRealization f = build_realization(config.seed, config.tau_c, config.t_max + 1.0);
    field.emplace(f, config.points_per_tau);
  }

  auto deriv = [&](double t, const State& y) {
    const Vec3 r = pos(y), v = vel(y);
    Vec3 acc = force(r, d);
    if (use_field) acc = acc - beta * field->field(t);
    if (use_damping) acc += (beta * beta) * force_rate(r, v, d);
    return State{v[0], v[1], v[2], acc[0], acc[1], acc[2]};
  };

  const OrbitParams& p = config.initial;
  if (p.d != d) throw DomainError("config: initial orbit was built with a different d");
  const Vec3 r0 = orbit_position(p, config.initial_anomaly), v0 = orbit_velocity(p, config.initial_anomaly);
  State y{r0[0], r0[1], r0[2], v0[0], v0[1], v0[2]};

  TrajectoryRecord rec;
  rec.L_histogram = make_histogram();
  rec.samples.push_back(make_sample(0.0, y, d));
  double t = 0.0;
  double next_sample = config.sample_interval;
  double positive_since = -1.0;
  const double h_field = use_field ? 0.5 * config.tau_c : INFINITY;
  double h = std::min(h_field, config.dt_base * std::pow(norm(r0), 1.5));
  State k1 = deriv(t, y);

  while (t < config.t_max) {
    const double rr = norm(pos(y));
    const double h_cap = std::min(h_field, config.dt_base * std::pow(rr, 1.5));
    h = std::min({h, h_cap, config.t_max - t});
    if (h < 1e-14 * std::max(1.0, t)) {
      rec.underflow = true;
      break;
    }
    const State k2 = deriv(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    const State k3 = deriv(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const State k4 = deriv(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = deriv(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State ys = axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    if (norm(pos(ys)) < 1e-8) {
      h *= 0.25;
      ++rec.rejected;
      continue;
    }
    const State k6 = deriv(t + h, ys);
    const State yn = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    if (norm(pos(yn)) < 1e-8) {
      h *= 0.25;
      ++rec.rejected;
      continue;
    }
    const State k7 = deriv(t + h, yn);
    double err = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = config.abs_tol + config.rel_tol * std::max(std::fabs(y[i]), std::fabs(yn[i]));
      err = std::max(err, std::fabs(ei) / sc);
    }
    if (!(err <= 1.0)) {
      h *= std::max(0.1, 0.9 * std::pow(std::isfinite(err) ? err : 1e10, -0.2));
      ++rec.rejected;
      continue;
    }
    // Dwell weight of the step goes to the L of its starting point.
    const Vec3 rs = pos(y), vs = vel(y);
    const double L_start = norm(cross(rs, vs));
    add_to_histogram(rec.L_histogram, L_start, h);

    t += h;
    y = yn;
    k1 = k7;
    ++rec.steps;
    h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));

    const TrajectorySample s = make_sample(t, y, d);
    bool take = false;
    if (t >= next_sample) {
      take = true;
      while (next_sample <= t) next_sample += config.sample_interval;
    }
    if (s.energy > 0.0) {
      if (positive_since < 0.0) positive_since = t;
    } else {
      positive_since = -1.0;
    }
    const bool escaped = positive_since >= 0.0 && t - positive_since >= config.ionisation_window &&
                         norm(s.r) > config.ionisation_r && dot(s.r, s.v) > 0.0;
    if (take || escaped || t >= config.t_max) rec.samples.push_back(s);
    if (escaped && config.stop_on_ionisation) break;
  }
  rec.ionised_at = detect_self_ionisation(rec, config);
  return rec;
}

std::vector<TrajectoryRecord> integrate_ensemble(const SimConfig& config, const std::vector<std::uint64_t>& seeds) {
  std::vector<TrajectoryRecord> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    SimConfig c = config;
    c.seed = seeds[i];
    out[i] = integrate(c);
  });
  return out;
}

std::optional<double> detect_self_ionisation(const TrajectoryRecord& record, const SimConfig& config) {
  double streak_start = -1.0;
  for (const auto& s : record.samples) {
    if (!(s.energy > 0.0)) {
      streak_start = -1.0;
      continue;
    }
    if (streak_start < 0.0) streak_start = s.t;
    if (s.t - streak_start >= config.ionisation_window && norm(s.r) > config.ionisation_r && dot(s.r, s.v) > 0.0)
      return s.t;
  }
  return std::nullopt;
}

GainMeasurement frozen_orbit_gain(const SimConfig& config, const OrbitParams& params, int n_seeds,
                                  const FrozenGainOptions& options) {
  if (n_seeds < 2) throw DomainError("frozen_orbit_gain: need at least two seeds");
  if (options.window_periods < 1 || options.memory_periods < 0 || options.segments < 1 ||
      options.steps_per_tau < 2 || !(options.low_band >= 0.0) || options.low_band_oversample < 1)
    throw DomainError("frozen_orbit_gain: invalid options");
  const double P = params.period();
  const double tau = config.tau_c;
  const double rp = params.pericentre();
  const double k3 = params.k * params.k * params.k;
  const double omega_peri = k3 / ((1.0 - params.eps) * std::sqrt(1.0 - params.eps));
  const double omega_cut = options.low_band * omega_peri;

  // Whole steps per period; the orbit Jacobian is tabulated on the half-step grid.
  struct Grid {
    long per_period = 0;
    double h = 0.0;
    std::vector<Mat3> jac;
  };
  auto make_grid = [&](double h_want) {
    Grid g;
    g.per_period = static_cast<long>(std::ceil(P / h_want));
    g.h = P / static_cast<double>(g.per_period);
    g.jac.resize(static_cast<std::size_t>(2 * g.per_period));
    for (long i = 0; i < 2 * g.per_period; ++i) {
      const double t = 0.5 * g.h * static_cast<double>(i);
      const double a = solve_eccentric_anomaly(k3 * t, params.eps);
      g.jac[static_cast<std::size_t>(i)] = force_jacobian(orbit_position(params, a), params.d);
    }
    return g;
  };
  const double h_orbit = 0.01 * rp * std::sqrt(rp);
  const Grid sampled = make_grid(std::min(tau / options.steps_per_tau, h_orbit));
  const Grid smooth = make_grid(std::min(2.0 * kPi / (16.0 * std::max(omega_cut, 1e-300)), h_orbit));

  // Window weight: indicator of window_periods whole periods smoothed by a
  // one-period Hann bump, so every orbital phase gets equal weight and the
  // window edges do not leak the large P . w' boundary term.
  auto weight = [&](double u) {
    const double x = u / P;
    const double m = options.window_periods;
    auto ramp = [](double z) { return z <= 0.0 ? 0.0 : z >= 1.0 ? 1.0 : z - std::sin(2.0 * kPi * z) / (2.0 * kPi); };
    return ramp(x) - ramp(x - m);
  };
  const int segment_periods = options.memory_periods + options.window_periods + 1;
  const double duration = P * (options.window_periods * (options.segments - 1) + segment_periods) + tau;
  const double norm_segment = P * options.window_periods;

  // Weighted integral of E . w' over one segment starting at period p0.
  auto segment = [&](const Grid& g, long p0, auto&& efield, auto&& second_primitive) {
    const double h = g.h;
    const long half_period = 2 * g.per_period;
    auto J = [&](long half_index) { return g.jac[static_cast<std::size_t>(half_index % half_period)]; };
    // y = (w, w'), classical RK4 on the half-step grid.
    auto rhs = [&](long half_index, double t, const State& y) {
      const Vec3 a = J(half_index) * (second_primitive(t) + pos(y));
      return State{y[3], y[4], y[5], a[0], a[1], a[2]};
    };
    const long n0 = p0 * g.per_period;
    const long n_memory = g.per_period * options.memory_periods;
    const long n_segment = g.per_period * segment_periods;
    const double tw = h * static_cast<double>(n0 + n_memory);
    auto integrand = [&](double t, const State& y) { return weight(t - tw) * dot(efield(t), vel(y)); };
    double acc = 0.0;
    State y{};
    for (long n = n0; n < n0 + n_segment; ++n) {
      const double t = h * static_cast<double>(n);
      const long i0 = 2 * n, i1 = 2 * n + 1, i2 = 2 * n + 2;
      const State q1 = rhs(i0, t, y);
      const State q2 = rhs(i1, t + 0.5 * h, axpy(y, 0.5 * h, {{1.0, &q1}}));
      const State q3 = rhs(i1, t + 0.5 * h, axpy(y, 0.5 * h, {{1.0, &q2}}));
      const State q4 = rhs(i2, t + h, axpy(y, h, {{1.0, &q3}}));
      const State yn = axpy(y, h, {{1.0 / 6, &q1}, {1.0 / 3, &q2}, {1.0 / 3, &q3}, {1.0 / 6, &q4}});
      if (n >= n0 + n_memory) {
        // Simpson on [t, t + h]; midpoint from the cubic Hermite through y and yn.
        State ymid;
        for (int i = 0; i < 3; ++i) {
          ymid[i] = 0.5 * (y[i] + yn[i]) + h / 8.0 * (y[i + 3] - yn[i + 3]);
          ymid[i + 3] = 1.5 / h * (yn[i] - y[i]) - 0.25 * (y[i + 3] + yn[i + 3]);
        }
        acc += h / 6.0 * (integrand(t, y) + 4.0 * integrand(t + 0.5 * h, ymid) + integrand(t + h, yn));
      }
      y = yn;
    }
    return acc;
  };

  const int n_modes = minimum_modes(tau, duration);
  const double d_omega = kOmegaMaxTau / tau / n_modes;
  const int n_low = std::min(n_modes, static_cast<int>(omega_cut / d_omega));

  // Low band [0, (n_low + 1/2) d_omega): midpoint sum on a grid fine enough
  // for resonances of width ~ 1 / segment length, each quadrature
  // cos(w t + phase) e_c carrying variance S(w) dw.
  const double band = n_low > 0 ? (n_low + 0.5) * d_omega : 0.0;
  const int fine = static_cast<int>(std::ceil(band * P * segment_periods * options.low_band_oversample / (2.0 * kPi)));
  const double d_fine = fine > 0 ? band / fine : 0.0;
  std::vector<double> low(static_cast<std::size_t>(fine) * 6, 0.0);
  parallel_for(low.size(), [&](std::size_t i) {
    const int n = static_cast<int>(i / 6), c = static_cast<int>(i % 6) / 2;
    const double w = (n + 0.5) * d_fine, ph = (i % 2) ? -0.5 * kPi : 0.0;
    auto e = [&](double t) {
      Vec3 v{};
      v[c] = std::cos(w * t + ph);
      return v;
    };
    auto q = [&](double t) { return (-1.0 / (w * w)) * e(t); };
    low[i] = spectral_density(w, tau) * d_fine * segment(smooth, 0, e, q) / norm_segment;
  });
  double low_part = 0.0;
  for (double v : low) low_part += v;

  std::vector<double> per_seed(static_cast<std::size_t>(n_seeds));
  parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t s) {
    FieldRealization f = build_realization(config.seed + s, tau, duration);
    for (int c = 0; c < 3; ++c)
      for (int n = 0; n < n_low; ++n) f.amplitude[c][n] = 0.0;
    const SampledField E(f, config.points_per_tau);
    auto e = [&](double t) { return E.field(t); };
    auto q = [&](double t) { return E.second_primitive(t); };
    double acc = 0.0;
    for (int seg = 0; seg < options.segments; ++seg)
      acc += segment(sampled, static_cast<long>(seg) * options.window_periods, e, q);
    per_seed[s] = acc / (norm_segment * options.segments);
  });
  double m = 0.0;
  for (double v : per_seed) m += v;
  m /= n_seeds;
  double var = 0.0;
  for (double v : per_seed) var += (v - m) * (v - m);
  var /= (n_seeds - 1);
  GainMeasurement out;
  out.rate = m + low_part;
  out.stderr_ = std::sqrt(var / n_seeds);
  out.seeds = n_seeds;
  out.low_band_part = low_part;
  return out;
}

double measured_damping_rate(const OrbitParams& params, double beta, int periods) {
  if (!(beta > 0.0) || periods < 1) throw DomainError("measured_damping_rate: need beta > 0 and periods >= 1");
  SimConfig c;
  c.beta = beta;
  c.d = params.d;
  c.initial = params;
  c.field = false;
  c.damping = true;
  c.t_max = params.period() * periods;
  c.sample_interval = c.t_max;
  c.rel_tol = 1e-12;
  c.abs_tol = 1e-14;
  c.dt_base = 0.01;
  const TrajectoryRecord r = integrate(c);
  const double e0 = r.samples.front().energy, e1 = r.samples.back().energy;
  return (e1 - e0) / (r.samples.back().t - r.samples.front().t) / (beta * beta);
}

PositroniumMapping map_positronium(double m1, double m2, double q1, double q2) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw DomainError("map_positronium: masses must be positive");
  PositroniumMapping p;
  p.m1 = m1;
  p.m2 = m2;
  p.q1 = q1;
  p.q2 = q2;
  p.M = m1 + m2;
  p.Q = q1 + q2;
  p.qbar = (m2 * q1 - m1 * q2) / p.M;
  p.mu_reduced = m1 * m2 / p.M;
  const double scale = std::max(std::fabs(q1), std::fabs(q2));
  p.centre_of_mass_coupled = std::fabs(p.Q) > 1e-12 * scale;
  return p;
}

}  // namespace sedlab
