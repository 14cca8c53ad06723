#include "sedlab/energy_rates.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sedlab/error.hpp"
#include "sedlab/greens.hpp"
#include "sedlab/jet.hpp"

namespace sedlab {

using std::atan;
using std::cos;
using std::sin;

namespace {

constexpr double kInvGolden = 0.6180339887498949;

double pow_int(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// Numerator h_c cos phi + h_s sin(phi)/mu + h_0 of the eccentric-limit
// integrand, generic so that it can run on series in the lag w = x - y.
template <class T>
T eccentric_numerator(const T& x, const T& y, double mu) {
  const double m2 = mu * mu, m4 = m2 * m2;
  const T x2 = x * x, y2 = y * y;
  const T x3 = x2 * x, x4 = x2 * x2, x5 = x4 * x, x6 = x4 * x2, x7 = x6 * x;
  const T y3 = y2 * y, y4 = y2 * y2, y6 = y4 * y2;
  const T px = 1.0 + x2, py = 1.0 + y2;
  const T delta = atan(x) - atan(y);  // in (0, pi) for x > y

  const T hc = 15.0 + y6 * (2.0 * m2 + x2 - 1.0) +
               5.0 * y4 * (x2 * (-2.0 * m2 * (x2 + 2.0) + 2.0 * x2 + 5.0) + 1.0) +
               10.0 * m2 * x * px * px * y3 +
               5.0 * y2 * (x2 * (-6.0 * m2 * (x2 + 2.0) + 4.0 * x2 + 11.0) + 1.0) +
               2.0 * x * y * (m2 * (19.0 * x4 + 30.0 * x2 - 5.0) + 2.0 * (x6 + 4.0 * x4 + 5.0 * x2 + 10.0)) +
               5.0 * x2 * (-2.0 * m2 * (x4 + x2 - 1.0) + 2.0 * x2 + 3.0) -
               10.0 * (m2 - 1.0) * x * px * px * py * py * delta;

  const T hs = 4.0 * m2 * x7 + 10.0 * m2 * x6 * y + x5 * (8.0 * m4 + m2 * (26.0 - 10.0 * y2) + 5.0 * py * py) +
               10.0 * x3 * (-2.0 * m2 * (y2 - 2.0) + py * py + m4 * py * py) -
               10.0 * m2 * x4 * y * (m2 * (3.0 + y2) - 1.0) -
               2.0 * m2 * x2 * y * (2.0 * y4 - 5.0 + 10.0 * m2 * (3.0 + y2)) +
               5.0 * x * (py * py - 2.0 * m2 * (5.0 * y2 + 2.0 * y4 - 3.0) + 2.0 * m4 * (6.0 * y2 + 3.0 * y4 - 1.0)) -
               2.0 * m2 * y * (15.0 - 2.0 * y4 + m2 * (5.0 * y2 + 4.0 * y4 - 5.0)) +
               10.0 * m2 * (m2 - 1.0) * px * px * py * py * delta;

  const T y2p3 = y2 + 3.0;
  const T h0 = (5.0 / 9.0) * (py / px) *
               (-2.0 * m2 * x6 - 12.0 * m2 * x4 + 4.0 * (m2 - 1.0) * x3 * y * y2p3 - 18.0 * m2 * x2 +
                12.0 * (m2 - 1.0) * x * y * y2p3 - 2.0 * (m2 - 1.0) * y2 * y2p3 * y2p3 + 2.0 * x6 +
                12.0 * x4 + 18.0 * x2 - 27.0 * px * px * px * px);

  const T phi = 2.0 * mu * delta;
  T sphi, cphi;
  sincos(phi, sphi, cphi);
  T sin_over_mu;
  if (mu < 1e-6) {
    const T p2 = phi * phi;
    sin_over_mu = 2.0 * delta * (1.0 - p2 * (1.0 / 6.0) + p2 * p2 * (1.0 / 120.0));
  } else {
    sin_over_mu = sphi * (1.0 / mu);
  }
  return hc * cphi + hs * sin_over_mu + h0;
}

double regulator_coefficient(double mu, double x) {
  const double px = 1.0 + x * x;
  return 64.0 * (1.0 - mu * mu) * x / (3.0 * pow_int(px, 5));
}

constexpr std::size_t kEccOrder = 20;

// The phase runs at 2 mu / (1 + y^2) per unit lag; keep it below ~1.5 across
// the series window so the truncated cosine and sine stay accurate.
double eccentric_guard(double mu, double x) {
  const double px = 1.0 + x * x;
  return std::min(0.2 * std::sqrt(px), 0.75 * px / std::max(mu, 1.0));
}

}  // namespace

QuadratureSpec field_gain_spec() {
  QuadratureSpec s;
  s.rel_tol = 1e-8;
  s.abs_tol = 1e-14;
  s.tail_cut = 16.0 * 2.0 * kPi;
  s.max_subdivisions = 4000;
  return s;
}

QuadResult field_gain_f_detailed(double kappa, const QuadratureSpec& spec) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw DomainError("field_gain_f: kappa must lie in (0, 1]");
  const double eps = std::sqrt((1.0 - kappa) * (1.0 + kappa));
  const OrbitParams p = OrbitParams::from_energy(1.0, eps);
  TailOptions opts;
  opts.block = 2.0 * kPi;
  opts.inner_rel_tol = spec.rel_tol * 0.01;
  auto f = [&p](double a, double b) { return field_gain_integrand(p, a, b); };
  QuadResult r = integrate_double_tail(f, -kPi, kPi, spec, opts);
  const double k2 = kappa * kappa;
  const double pre = 6.0 * k2 * k2 * k2 / (kPi * kPi * (3.0 - k2));
  r.value *= pre;
  r.error *= pre;
  return r;
}

double field_gain_f(double kappa) { return field_gain_f_detailed(kappa).value; }

double f0_integrand(double u, double v) {
  const double u2 = u * u;
  const double num = 5.0 + 3.0 * u2 + 8.0 * u * v - v * v + 4.0 * u2 * u * v + u2 * v * v;
  const double q = 3.0 + u2 + u * v + v * v;
  const double q2 = q * q;
  const double pu = 1.0 + u2;
  return num / (pu * pu * q2 * q2);
}

QuadResult field_gain_f_limit(const QuadratureSpec& spec) {
  QuadratureSpec inner_spec = spec;
  inner_spec.rel_tol = spec.rel_tol * 0.01;
  auto inner = [&](double u) {
    return integrate_1d([u](double v) { return f0_integrand(u, v); }, -INFINITY, u, inner_spec).value;
  };
  QuadResult r = integrate_1d(inner, -INFINITY, INFINITY, spec);
  const double pre = 8.0 * 81.0 / (5.0 * kPi * kPi);
  r.value *= pre;
  r.error *= pre;
  return r;
}

double f0_closed_form() { return 16.0 / (5.0 * kPi * std::sqrt(3.0)); }

double critical_angular_momentum() { return f0_closed_form(); }

double critical_pericentre() {
  const double f0 = f0_closed_form();
  return 0.5 * f0 * f0;
}

double radiative_loss(const OrbitParams& p) {
  const double k = p.k, kap = p.kappa, d = p.d;
  if (!(kap > 0.0)) throw DomainError("radiative_loss: kappa must be positive");
  const double k2 = k * k, k8 = pow_int(k, 8);
  const double kap2 = kap * kap;
  const double kap5 = pow_int(kap, 5), kap7 = kap5 * kap2, kap9 = kap7 * kap2;
  return -k8 * ((3.0 - kap2) / (2.0 * kap5) + d * k2 * (5.0 - 3.0 * kap2) / kap7 +
                d * d * k2 * k2 * (35.0 - 30.0 * kap2 + 3.0 * kap2 * kap2) / (8.0 * kap9));
}

double circular_gain_rate(double k, double d) {
  const double lam2 = 1.0 + d * k * k;
  if (!(k > 0.0) || lam2 < 0.0) throw DomainError("circular rate: need k > 0 and 1 + d k^2 >= 0");
  const double lam = std::sqrt(lam2);
  const double k9 = pow_int(k, 9);
  if (d < 0.0) {
    const double poly = 1.0 - 6.0 * lam2 + 5.0 * lam2 * lam + 9.0 * lam2 * lam2 - 12.0 * lam2 * lam2 * lam +
                        4.0 * lam2 * lam2 * lam2;
    return 0.5 * k9 * poly;
  }
  return 0.5 * k9 * lam2 * lam;
}

double circular_total_rate_repulsive(double k, double d) {
  if (d > 0.0) throw DomainError("circular_total_rate_repulsive: requires d <= 0");
  const double lam2 = 1.0 + d * k * k;
  return circular_gain_rate(k, d) - pow_int(k, 8) * lam2 * lam2;
}

double circular_total_rate_attractive(double k, double d) {
  if (d < 0.0) throw DomainError("circular_total_rate_attractive: requires d >= 0");
  const double lam2 = 1.0 + d * k * k;
  return circular_gain_rate(k, d) - pow_int(k, 8) * lam2 * lam2;
}

double circular_total_rate_attractive_product(double k, double d) {
  if (d < 0.0) throw DomainError("circular_total_rate_attractive_product: requires d >= 0");
  if (!(k > 0.0)) throw DomainError("circular rate: need k > 0");
  const double lam = std::sqrt(1.0 + d * k * k);
  return 0.5 * pow_int(k, 8) * lam * lam * lam * ((1.0 - 4.0 * d) * k * k - 4.0) / (k + 2.0 * lam);
}

RateBreakdown total_rate_with_f(const OrbitParams& p, double f) {
  if (p.d != 0.0) throw DomainError("total_rate_with_f: requires d = 0");
  RateBreakdown r;
  r.gain_rate = pow_int(p.k, 9) / pow_int(p.kappa, 6) * (1.0 + 0.5 * p.eps * p.eps) * f;
  r.loss_rate = radiative_loss(p);
  r.total_rate = r.gain_rate + r.loss_rate;
  r.delta_per_period = r.total_rate * p.period();
  return r;
}

RateBreakdown total_rate(const OrbitParams& p) {
  if (p.d == 0.0) return total_rate_with_f(p, field_gain_f(p.kappa));
  if (p.eps >= kCircularEps) throw DomainError("total_rate: d != 0 is available for circular orbits only");
  RateBreakdown r;
  r.gain_rate = circular_gain_rate(p.k, p.d);
  r.loss_rate = radiative_loss(p);
  r.total_rate = r.gain_rate + r.loss_rate;
  r.delta_per_period = r.total_rate * p.period();
  return r;
}

double per_period_delta_d0(double L) {
  if (!(L > 0.0)) throw DomainError("per_period_delta_d0: L must be positive");
  return 3.0 * kPi / pow_int(L, 6) * (f0_closed_form() - L);
}

double eccentric_regulator(double mu, double x, double y) {
  const double w = x - y;
  return regulator_coefficient(mu, x) / (w * (w + 1.0));
}

namespace {

template <class R>
double eccentric_integrand_in(double mu, double x, double y, double guard) {
  const double w = x - y;
  const double creg = regulator_coefficient(mu, x);
  const R xr = x;
  if (w < guard) {
    using J = Jet<kEccOrder, R>;
    const J X(xr);
    const J Y = J::variable(xr, -1.0);
    const J num = eccentric_numerator(X, Y, mu);
    // num = O(w^3), k(x, y) = O(w^4); creg / w cancels the 1/w left over and
    // -creg / (1 + w) stays outside the series, which would otherwise stop at |w| = 1.
    const auto n3 = num.template shift_down<3>();
    using K = Jet<kEccOrder - 3, R>;
    const K Yk = K::variable(xr, -1.0);
    const K q = 3.0 + xr * xr + xr * Yk + Yk * Yk;
    const R px = 1.0 + xr * xr;
    const K q2 = q * q;
    const K kw4 = q2 * q2 * K(R(5.0) / R(324.0) * px * px);
    const K ratio = n3 / kw4 + K(R(creg));
    return static_cast<double>(ratio.template shift_down<1>().eval(w)) - creg / (1.0 + w);
  }
  const R yr = y;
  const R num = eccentric_numerator(xr, yr, mu);
  const R px = 1.0 + xr * xr;
  const R c = (xr - yr) * (3.0 + xr * xr + xr * yr + yr * yr);
  const R c2 = c * c;
  const R kden = R(5.0) / R(324.0) * px * px * c2 * c2;
  return static_cast<double>(num / kden) + creg / (w * (w + 1.0));
}

}  // namespace

double eccentric_gain_integrand(double mu, double x, double y) {
  if (!(mu >= 0.0)) throw DomainError("eccentric integrand: mu must be non-negative");
  return eccentric_integrand_in<long double>(mu, x, y, eccentric_guard(mu, x));
}

#ifdef SEDLAB_HAVE_FLOAT128
double eccentric_gain_integrand_quad(double mu, double x, double y, double guard) {
  return eccentric_integrand_in<quad>(mu, x, y, guard);
}
#endif

QuadratureSpec eccentric_gain_spec() {
  QuadratureSpec s;
  s.rel_tol = 1e-8;
  s.abs_tol = 1e-13;
  s.max_subdivisions = 4000;
  return s;
}

QuadResult G_of_mu_detailed(double mu, const QuadratureSpec& spec) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("G_of_mu: mu must be real and non-negative");
  // x = tan(alpha), y = tan(beta): the phase 2 mu (alpha - beta) becomes
  // linear, so panels of a fixed fraction of its period resolve it.
  const double half_pi = 0.5 * kPi;
  const int panels = 2 + static_cast<int>(std::ceil(2.0 * mu));
  QuadratureSpec inner_spec = spec;
  inner_spec.rel_tol = spec.rel_tol * 0.01;
  // Terms of the numerator grow like mu^4 and cancel; roundoff follows them.
  const double m4 = std::pow(std::max(mu, 1.0), 4);
  inner_spec.abs_tol = spec.abs_tol * m4;
  long evals = 0;
  auto split = [panels](const std::function<double(double)>& f, double lo, double hi, const QuadratureSpec& s,
                        long& count) {
    std::vector<double> pts(panels + 1);
    for (int i = 0; i <= panels; ++i) pts[i] = lo + (hi - lo) * i / panels;
    pts[panels] = hi;
    const QuadResult r = integrate_points(f, pts, s);
    count += r.evaluations;
    return r;
  };
  auto inner = [&](double alpha) {
    const double x = std::tan(alpha);
    const double sx = 1.0 + x * x;
    auto f = [&](double beta) {
      const double y = std::tan(beta);
      if (!std::isfinite(y)) return 0.0;
      return eccentric_gain_integrand(mu, x, y) * sx * (1.0 + y * y);
    };
    return split(f, -half_pi, alpha, inner_spec, evals).value;
  };
  long outer_evals = 0;
  QuadResult r = split(inner, -half_pi, half_pi, spec, outer_evals);
  const double pre = 3.0 / (kPi * kPi);
  r.value *= pre;
  r.error *= pre;
  r.evaluations = evals;
  return r;
}

double G_of_mu(double mu) { return G_of_mu_detailed(mu).value; }

double H_from_G(double mu, double G) {
  const double m2 = mu * mu;
  return 8.0 * std::sqrt(std::fabs(m2 - 1.0)) * G / (7.0 - 30.0 * m2 + 35.0 * m2 * m2);
}

double H_of_mu(double mu) {
  if (mu == 1.0) return 0.0;
  return H_from_G(mu, G_of_mu(mu));
}

double G_large_mu(double mu) { return 35.0 / 16.0 * mu * mu * mu - 15.0 / 8.0 * mu; }

double H_large_mu(double mu) { return 0.5 - 1.0 / (mu * mu); }

double kbar_from_mu(double mu, double d) {
  if (!(mu >= 0.0)) throw DomainError("kbar_from_mu: mu must be non-negative");
  if (d == 0.0) throw DomainError("kbar_from_mu: d = 0 leaves kbar undetermined");
  const double kb2 = (mu * mu - 1.0) / d;
  if (!(kb2 >= 0.0))
    throw DomainError("kbar_from_mu: inconsistent (mu, d), mu^2 = 1 + d kbar^2 has no real kbar");
  return std::sqrt(kb2);
}

double per_period_delta_kbar(double kbar, double d, double G) {
  const double kb2 = kbar * kbar;
  const double kb5 = pow_int(kbar, 5);
  return 2.0 * kPi * (kb5 * kbar * G - kb5 * (12.0 + 40.0 * d * kb2 + 35.0 * d * d * kb2 * kb2) / 8.0);
}

double per_period_delta_factored(double mu, double d, double H) {
  if (d == 0.0) throw DomainError("per_period_delta_factored: requires d != 0");
  const double m2 = mu * mu;
  const double ad = std::fabs(d);
  return 2.0 * kPi * std::pow(std::fabs(m2 - 1.0), 2.5) * (7.0 - 30.0 * m2 + 35.0 * m2 * m2) /
         (8.0 * ad * ad * ad) * (H - std::sqrt(ad));
}

double per_period_delta_dipole(double mu, double d) {
  kbar_from_mu(mu, d);  // validates the pair
  return per_period_delta_factored(mu, d, H_of_mu(mu));
}

CriticalDipole critical_dipole_strength(int grid_points) {
  if (grid_points < 3) throw DomainError("critical_dipole_strength: need at least 3 grid points");
  int best = 0;
  double best_h = -INFINITY;
  for (int i = 0; i < grid_points; ++i) {
    const double mu = static_cast<double>(i) / (grid_points - 1);
    const double h = H_of_mu(mu);
    if (h > best_h) {
      best_h = h;
      best = i;
    }
  }
  // Golden-section maximisation on the bracket around the best grid point.
  double lo = static_cast<double>(std::max(best - 1, 0)) / (grid_points - 1);
  double hi = static_cast<double>(std::min(best + 1, grid_points - 1)) / (grid_points - 1);
  double c = hi - kInvGolden * (hi - lo), d = lo + kInvGolden * (hi - lo);
  double hc = H_of_mu(c), hd = H_of_mu(d);
  for (int it = 0; it < 40 && hi - lo > 1e-6; ++it) {
    if (hc > hd) {
      hi = d;
      d = c;
      hd = hc;
      c = hi - kInvGolden * (hi - lo);
      hc = H_of_mu(c);
    } else {
      lo = c;
      c = d;
      hc = hd;
      d = lo + kInvGolden * (hi - lo);
      hd = H_of_mu(d);
    }
  }
  CriticalDipole out;
  out.mu_at_sup = best_h >= std::max(hc, hd) ? static_cast<double>(best) / (grid_points - 1)
                                              : (hc > hd ? c : d);
  out.H_sup = std::max(best_h, std::max(hc, hd));
  out.d_c = -out.H_sup * out.H_sup;
  return out;
}

}  // namespace sedlab
