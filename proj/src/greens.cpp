#include "sedlab/greens.hpp"

#include <cmath>

#include "sedlab/error.hpp"
#include "sedlab/jet.hpp"

namespace sedlab {

using std::cos;
using std::sin;

namespace {

template <class T>
using V3 = std::array<T, 3>;
template <class T>
using M3 = std::array<V3<T>, 3>;

template <class T>
V3<T> scale(const V3<T>& v, const T& s) {
  return {v[0] * s, v[1] * s, v[2] * s};
}

// True anomaly with the floor unwinding, generic in the scalar type.
template <class T>
T phi_generic(const T& a, const T& eps, const T& kappa, double mu) {
  const double n = std::floor((kPi + scalar_value(a)) / (2.0 * kPi));
  const T half = 0.5 * (a - 2.0 * kPi * n);
  T s, c;
  sincos(half, s, c);
  const T q = (1.0 + eps) / kappa;
  return 2.0 * mu * (atan2_generic(q * s, c) + kPi * n);
}

template <class T>
struct BasisT {
  T rho, tau, phi, dphi;  // dphi = d phi / d a
  V3<T> h1, h2p, h3, h4p, h5, h6;
  V3<T> d1, d2p, d3, d4p, d5, d6;  // d/da of the above
};

template <class T>
BasisT<T> eval_basis(const T& eps, const T& kappa, double mu, const T& a) {
  const T zero(0.0);
  BasisT<T> B;
  T s, c;
  sincos(a, s, c);
  B.rho = 1.0 - eps * c;
  B.tau = a - eps * s;
  B.phi = phi_generic(a, eps, kappa, mu);
  const T irho = 1.0 / B.rho;
  const T irho2 = irho * irho;
  const T drho = eps * s;
  const T kmu = kappa * mu;
  const T k2 = kappa * kappa;
  B.dphi = kmu * irho;

  B.h1 = {eps * s * irho, kmu * irho, zero};
  B.d1 = {eps * c * irho - eps * s * drho * irho2, -kmu * drho * irho2, zero};

  const V3<T> n2 = {k2 * (c - eps) - 2.0 * eps * B.rho * B.rho, -kmu * (k2 + B.rho) * s, zero};
  const V3<T> dn2 = {-k2 * s - 4.0 * eps * B.rho * drho, -kmu * (drho * s + (k2 + B.rho) * c), zero};
  B.h2p = scale(n2, irho);
  B.d2p = {dn2[0] * irho - n2[0] * drho * irho2, dn2[1] * irho - n2[1] * drho * irho2, zero};

  B.h3 = {zero, B.rho, zero};
  B.d3 = {zero, drho, zero};

  const V3<T> n4 = {mu * kappa * (eps - c), mu * mu * (k2 + B.rho) * s, zero};
  const V3<T> dn4 = {mu * kappa * s, mu * mu * (drho * s + (k2 + B.rho) * c), zero};
  B.h4p = scale(n4, irho);
  B.d4p = {dn4[0] * irho - n4[0] * drho * irho2, dn4[1] * irho - n4[1] * drho * irho2, zero};

  T sp, cp;
  sincos(B.phi, sp, cp);
  const T c6 = eps / kmu;
  B.h5 = {zero, zero, B.rho * sp};
  B.d5 = {zero, zero, drho * sp + B.rho * cp * B.dphi};
  B.h6 = {zero, zero, c6 * B.rho * cp};
  B.d6 = {zero, zero, c6 * (drho * cp - B.rho * sp * B.dphi)};
  return B;
}

// eps k^3 Gamma(t,s) and eps rho_a dGamma/dt, plus the frame rotation.
template <class T>
struct Paired {
  M3<T> P, D;
  T C, S;  // cos, sin of phi_a - phi_b
  T trP;   // eps k^3 tr G
  T trD;   // eps rho_a d/dt tr G
};

template <class T>
void add_outer(M3<T>& m, const V3<T>& u, const V3<T>& v, double sign) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] += sign * (u[i] * v[j]);
}

template <class T>
Paired<T> assemble(const BasisT<T>& A, const BasisT<T>& B, const T& tau_ab, const T& phi_ab,
                   const T& eps, const T& kappa, double mu) {
  Paired<T> out;
  const T zero(0.0);
  for (auto& row : out.P) row = {zero, zero, zero};
  out.D = out.P;
  const T sigma = eps * ((mu * mu - 1.0) / mu) / kappa;

  add_outer(out.P, A.h1, B.h2p, 1.0);
  add_outer(out.P, A.h2p, B.h1, -1.0);
  add_outer(out.P, scale(A.h1, 3.0 * eps * tau_ab), B.h1, -1.0);
  add_outer(out.P, A.h3, B.h4p, 1.0);
  add_outer(out.P, A.h4p, B.h3, -1.0);
  add_outer(out.P, scale(A.h3, sigma * phi_ab), B.h3, -1.0);
  add_outer(out.P, A.h5, B.h6, 1.0);
  add_outer(out.P, A.h6, B.h5, -1.0);

  add_outer(out.D, A.d1, B.h2p, 1.0);
  add_outer(out.D, A.d2p, B.h1, -1.0);
  const V3<T> sec1 = {3.0 * eps * (A.rho * A.h1[0] + tau_ab * A.d1[0]),
                      3.0 * eps * (A.rho * A.h1[1] + tau_ab * A.d1[1]), zero};
  add_outer(out.D, sec1, B.h1, -1.0);
  add_outer(out.D, A.d3, B.h4p, 1.0);
  add_outer(out.D, A.d4p, B.h3, -1.0);
  const V3<T> sec3 = {zero, sigma * (A.dphi * A.h3[1] + phi_ab * A.d3[1]), zero};
  add_outer(out.D, sec3, B.h3, -1.0);
  add_outer(out.D, A.d5, B.h6, 1.0);
  add_outer(out.D, A.d6, B.h5, -1.0);

  sincos(phi_ab, out.S, out.C);
  const T inplane = out.P[0][0] + out.P[1][1];
  const T skew = out.P[0][1] - out.P[1][0];
  out.trP = inplane * out.C + skew * out.S + out.P[2][2];
  out.trD = (out.D[0][0] + out.D[1][1]) * out.C + (out.D[0][1] - out.D[1][0]) * out.S + out.D[2][2] +
            A.dphi * (skew * out.C - inplane * out.S);
  return out;
}

GreensEval finish_eval(const OrbitParams& p, double a, double b, const M3<double>& P,
                       const M3<double>& D, double trP, double trD, double eps_factor, double rho_a) {
  GreensEval ev;
  ev.a = a;
  ev.b = b;
  const double k3 = p.k * p.k * p.k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      ev.gamma[i][j] = P[i][j] / (eps_factor * k3);
      ev.gamma_dot[i][j] = D[i][j] / (eps_factor * rho_a);
    }
  ev.g = trP / (eps_factor * k3);
  ev.gdot = trD / (eps_factor * rho_a) - 3.0;
  ev.g33 = ev.gamma[2][2];
  return ev;
}

// Circular limit: expand the paired products in eps around zero and divide
// the series by eps. Orders beyond eps^2 are below roundoff for eps < 1e-6.
using EpsJet = Jet<4>;

GreensEval greens_near_circular(const OrbitParams& p, double a, double b) {
  const EpsJet eps = EpsJet::variable(0.0);
  const EpsJet kappa = sqrt(1.0 - eps * eps);
  const auto A = eval_basis<EpsJet>(eps, kappa, p.mu, EpsJet(a));
  const auto B = eval_basis<EpsJet>(eps, kappa, p.mu, EpsJet(b));
  const EpsJet tau_ab = A.tau - B.tau;
  const EpsJet phi_ab = A.phi - B.phi;
  const auto pr = assemble(A, B, tau_ab, phi_ab, eps, kappa, p.mu);
  const double e = p.eps;
  auto reduce = [e](const EpsJet& x) { return x[1] + e * (x[2] + e * x[3]); };
  auto value = [e](const EpsJet& x) { return x[0] + e * (x[1] + e * (x[2] + e * x[3])); };
  M3<double> P{}, D{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      P[i][j] = reduce(pr.P[i][j]);
      D[i][j] = reduce(pr.D[i][j]);
    }
  // With the division by eps already done, eps_factor is 1.
  GreensEval ev = finish_eval(p, a, b, P, D, reduce(pr.trP), reduce(pr.trD), 1.0, value(A.rho));
  return ev;
}

GreensEval greens_direct(const OrbitParams& p, double a, double b) {
  const double eps = p.eps, kappa = p.kappa;
  const auto A = eval_basis<double>(eps, kappa, p.mu, a);
  const auto B = eval_basis<double>(eps, kappa, p.mu, b);
  const double tau_ab = (a - b) - eps * (std::sin(a) - std::sin(b));
  const double phi_ab = angle_difference(a, b, p);
  const auto pr = assemble(A, B, tau_ab, phi_ab, eps, kappa, p.mu);
  return finish_eval(p, a, b, pr.P, pr.D, pr.trP, pr.trD, eps, A.rho);
}

// Series of gdot(a, a - h) in h. Lag jets carry 24 terms so that dropping the
// four cancelling orders still leaves 20.
constexpr std::size_t kLagOrder = 24;
using LagJet = Jet<kLagOrder>;

LagJet gdot_lag_jet(const OrbitParams& p, double a) {
  const LagJet b = LagJet::variable(a, -1.0);
  if (p.eps >= kCircularEps) {
    const LagJet eps(p.eps), kappa(p.kappa);
    const auto A = eval_basis<LagJet>(eps, kappa, p.mu, LagJet(a));
    const auto B = eval_basis<LagJet>(eps, kappa, p.mu, b);
    const LagJet tau_ab = A.tau - B.tau;
    const LagJet phi_ab = A.phi - B.phi;
    const auto pr = assemble(A, B, tau_ab, phi_ab, eps, kappa, p.mu);
    return pr.trD / (p.eps * A.rho) - 3.0;
  }
  using Nested = Jet<4, LagJet>;
  const Nested eps = Nested::variable(LagJet(0.0));
  const Nested kappa = sqrt(1.0 - eps * eps);
  const auto A = eval_basis<Nested>(eps, kappa, p.mu, Nested(LagJet(a)));
  const auto B = eval_basis<Nested>(eps, kappa, p.mu, Nested(b));
  const Nested tau_ab = A.tau - B.tau;
  const Nested phi_ab = A.phi - B.phi;
  const auto pr = assemble(A, B, tau_ab, phi_ab, eps, kappa, p.mu);
  const double e = p.eps;
  const LagJet trD = pr.trD[1] + e * (pr.trD[2] + e * pr.trD[3]);
  const LagJet rho = A.rho[0] + e * (A.rho[1] + e * (A.rho[2] + e * A.rho[3]));
  return trD / rho - 3.0;
}

// d = 0 compact form of rho_a rho_b gdot, generic in the type of b. The
// terms cancel to high order near pericentre of eccentric orbits, so callers
// evaluate it in extended precision.
template <class T, class R>
T compact_weighted_gdot(R a, const T& b, R eps) {
  T sb, cb;
  sincos(b, sb, cb);
  const R sa = sin(a), ca = cos(a);
  T sab, cab;
  sincos(a - b, sab, cab);
  T s2ab, c2ab;
  sincos(2.0 * (a - b), s2ab, c2ab);
  T sa2b, ca2b, s2ab1, c2ab1;
  sincos(a - 2.0 * b, sa2b, ca2b);
  sincos(2.0 * a - b, s2ab1, c2ab1);
  const R e2 = eps * eps;
  const R two_a = 2 * a;

  const T A = 5.0 * sab + 0.5 * s2ab + 1.5 * e2 * (sin(two_a) - sin(2.0 * b) + 2.0 * sab) -
              2.0 * eps * (3.0 * (sa - sb) + sa2b + s2ab1);
  const T dA = 5.0 * cab + c2ab + 1.5 * e2 * (2.0 * cos(two_a) + 2.0 * cab) -
               2.0 * eps * (3.0 * ca + ca2b + 2.0 * c2ab1);
  const T B = -3.0 * cab + 3.0 * e2 * ca * cb;
  const T dB = 3.0 * sab - 3.0 * e2 * sa * cb;
  const R rho_a = 1 - eps * ca;
  const T rho_b = 1.0 - eps * cb;
  const T tau = (a - b) - eps * (sa - sb);
  const T num = A + B * tau;
  const T dnum = dA + dB * tau + B * rho_a;
  return dnum / rho_a - num * (eps * sa / (rho_a * rho_a)) - 3.0 * rho_a * rho_b;
}

}  // namespace

HomogeneousBasis homogeneous_solutions(const OrbitParams& p, double a) {
  const auto B = eval_basis<double>(p.eps, p.kappa, p.mu, a);
  HomogeneousBasis out;
  const double sigma = p.eps * (p.mu * p.mu - 1.0) / (p.kappa * p.mu);
  out.rho = B.rho;
  out.secular_tau = B.tau;
  out.secular_phi = B.phi;
  out.h2_periodic = B.h2p;
  out.h4_periodic = B.h4p;
  auto axpy = [](const Vec3& x, double s, const Vec3& y) { return x + s * y; };
  out.h = {B.h1, axpy(B.h2p, 3.0 * p.eps * B.tau, B.h1), B.h3, axpy(B.h4p, sigma * B.phi, B.h3),
           B.h5, B.h6};
  out.dh_da = {B.d1,
               B.d2p + 3.0 * p.eps * (B.rho * B.h1 + B.tau * B.d1),
               B.d3,
               B.d4p + sigma * (B.dphi * B.h3 + B.phi * B.d3),
               B.d5,
               B.d6};
  return out;
}

GreensEval greens_matrix(const OrbitParams& params, double a, double b) {
  if (params.eps < kCircularEps) return greens_near_circular(params, a, b);
  return greens_direct(params, a, b);
}

double trace_g(const OrbitParams& params, double a, double b) { return greens_matrix(params, a, b).g; }

double compact_A(double a, double b, double eps) {
  const double e2 = eps * eps;
  return 5.0 * std::sin(a - b) + 0.5 * std::sin(2.0 * (a - b)) +
         1.5 * e2 * (std::sin(2.0 * a) - std::sin(2.0 * b) + 2.0 * std::sin(a - b)) -
         2.0 * eps * (3.0 * (std::sin(a) - std::sin(b)) + std::sin(a - 2.0 * b) + std::sin(2.0 * a - b));
}

double compact_B(double a, double b, double eps) {
  return -3.0 * std::cos(a - b) + 3.0 * eps * eps * std::cos(a) * std::cos(b);
}

double trace_g_compact(const OrbitParams& params, double a, double b) {
  if (std::fabs(params.d) > 0.0) throw DomainError("trace_g_compact: compact form holds for d = 0 only");
  const double eps = params.eps;
  const double tau = (a - b) - eps * (std::sin(a) - std::sin(b));
  const double k3 = params.k * params.k * params.k;
  return (compact_A(a, b, eps) + compact_B(a, b, eps) * tau) /
         ((1.0 - eps * std::cos(a)) * (1.0 - eps * std::cos(b)) * k3);
}

double gdot_subtracted(const OrbitParams& params, double a, double b) {
  return greens_matrix(params, a, b).gdot;
}

double regulator_subtraction(const OrbitParams& params, double a, double lag) {
  if (params.d == 0.0) return 0.0;
  const double r = (1.0 - params.eps * std::cos(a)) / (params.k * params.k);
  return -params.d * lag * lag / (2.0 * r * r * r * r);
}

ShortLagCoefficients short_lag_coefficients(const OrbitParams& params, double a) {
  const double r = (1.0 - params.eps * std::cos(a)) / (params.k * params.k);
  const double r4 = r * r * r * r;
  ShortLagCoefficients c;
  c.c2 = params.d / (2.0 * r4);
  c.c3 = 2.0 * params.d * params.eps * std::sin(a) / (3.0 * params.k * r4 * r * r);
  return c;
}

std::array<double, 20> gdot_anomaly_series(const OrbitParams& params, double a) {
  const LagJet j = gdot_lag_jet(params, a);
  std::array<double, 20> out{};
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = j[n];
  return out;
}

double diagonal_guard(const OrbitParams& params, double a) {
  // Radius of convergence of the lag series: distance from a to the nearest
  // complex zero of 1 - eps cos b, capped at 1.
  const double ar = a - 2.0 * kPi * std::floor((a + kPi) / (2.0 * kPi));
  const double im = params.eps > 0.0 ? std::acosh(1.0 / params.eps) : 1.0;
  const double radius = std::fmin(1.0, std::sqrt(ar * ar + im * im));
  return 0.2 * radius;
}

namespace {

template <class R>
double field_gain_integrand_in(const OrbitParams& params, double a, double b) {
  const double h = a - b;
  const R ar = a, er = params.eps;
  if (h < diagonal_guard(params, a)) {
    using LongJet = Jet<kLagOrder, R>;
    const LongJet bj = LongJet::variable(ar, -1.0);
    const LongJet w = compact_weighted_gdot(ar, bj, er);
    LongJet sb, cb;
    sincos(bj, sb, cb);
    const LongJet tau = (ar - bj) - er * (sin(ar) - sb);
    // w = O(h^4) and tau = O(h): divide both analytically by their leading powers.
    const auto w4 = w.template shift_down<4>();
    const auto t1 = tau.template shift_down<1>();
    Jet<kLagOrder - 4, R> t1r;
    for (std::size_t n = 0; n < kLagOrder - 4; ++n) t1r[n] = t1[n];
    const auto t2 = t1r * t1r;
    return static_cast<double>((w4 / (t2 * t2)).eval(h));
  }
  const R br = b;
  const R tau = (ar - br) - er * (sin(ar) - sin(br));
  const R t2 = tau * tau;
  return static_cast<double>(compact_weighted_gdot(ar, br, er) / (t2 * t2));
}

}  // namespace

double field_gain_integrand(const OrbitParams& params, double a, double b) {
#ifdef SEDLAB_HAVE_FLOAT128
  if (params.kappa < kQuadPrecisionKappa) return field_gain_integrand_in<quad>(params, a, b);
#endif
  return field_gain_integrand_in<long double>(params, a, b);
}

}  // namespace sedlab
