#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "sedlab/greens.hpp"
#include "sedlab/kepler.hpp"
#include "sedlab/sed_simulator.hpp"

using namespace sedlab;

namespace {

// Comoving frame at anomaly a: e1 radial, e2 = z x e1, e3 = z.
Mat3 frame(const OrbitParams& p, double a) {
  const Vec3 r = orbit_position(p, a);
  const Vec3 e1 = (1.0 / norm(r)) * r;
  const Vec3 e3{0.0, 0.0, 1.0};
  return {e1, cross(e3, e1), e3};
}

Vec3 to_inertial(const Mat3& e, const Vec3& c) { return c[0] * e[0] + c[1] * e[1] + c[2] * e[2]; }

// Max residual of x'' = (df/dr) x, relative, for a displacement given as a function of the anomaly.
double variational_residual(const OrbitParams& p, const std::function<Vec3(double)>& X, double a) {
  const double s = 2e-3;
  const Vec3 m2 = X(a - 2 * s), m1 = X(a - s), c = X(a), p1 = X(a + s), p2 = X(a + 2 * s);
  const Vec3 d1 = (1.0 / (12.0 * s)) * (m2 - 8.0 * m1 + 8.0 * p1 - p2);
  const Vec3 d2 = (1.0 / (12.0 * s * s)) * (-1.0 * m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2);
  const double rho = 1.0 - p.eps * std::cos(a), w = p.k * p.k * p.k / rho;
  const Vec3 acc = (w * w) * (d2 - (p.eps * std::sin(a) / rho) * d1);
  const Vec3 jx = force_jacobian(orbit_position(p, a), p.d) * c;
  return norm(acc - jx) / (norm(acc) + norm(jx) + 1e-300);
}

// Response at time t (anomaly a) to a unit velocity kick along inertial axis j at anomaly b,
// by RK4 on x'' = (df/dr) x.
Vec3 impulse_response(const OrbitParams& p, double b, double a, int j, int steps) {
  const double k3 = p.k * p.k * p.k;
  const double t0 = (b - p.eps * std::sin(b)) / k3, t1 = (a - p.eps * std::sin(a)) / k3;
  const double dt = (t1 - t0) / steps;
  auto jac = [&](double t) { return force_jacobian(orbit_position(p, solve_eccentric_anomaly(k3 * t, p.eps)), p.d); };
  Vec3 x{}, v{};
  v[j] = 1.0;
  for (int n = 0; n < steps; ++n) {
    const double t = t0 + n * dt;
    const Mat3 J0 = jac(t), Jh = jac(t + 0.5 * dt), J1 = jac(t + dt);
    const Vec3 k1x = v, k1v = J0 * x;
    const Vec3 k2x = v + (0.5 * dt) * k1v, k2v = Jh * (x + (0.5 * dt) * k1x);
    const Vec3 k3x = v + (0.5 * dt) * k2v, k3v = Jh * (x + (0.5 * dt) * k2x);
    const Vec3 k4x = v + dt * k3v, k4v = J1 * (x + dt * k3x);
    x += (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return x;
}

}  // namespace

TEST_CASE("Gamma vanishes on the diagonal and its time derivative is the identity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ue(0.0, 0.9), ud(-0.2, 0.2), ua(-6.0, 6.0), uk(0.6, 1.6);
  for (int i = 0; i < 50; ++i) {
    const auto p = OrbitParams::from_energy(uk(rng), ue(rng), ud(rng));
    const double a = ua(rng);
    const GreensEval g = greens_matrix(p, a, a);
    CHECK(max_abs(g.gamma) <= 1e-12);
    Mat3 dev = g.gamma_dot;
    for (int n = 0; n < 3; ++n) dev[n][n] -= 1.0;
    CHECK(max_abs(dev) <= 1e-12);

    const double h = 1e-3, rho = 1.0 - p.eps * std::cos(a), k3 = p.k * p.k * p.k;
    const Mat3 gm2 = greens_matrix(p, a - 2 * h, a).gamma, gm1 = greens_matrix(p, a - h, a).gamma;
    const Mat3 gp1 = greens_matrix(p, a + h, a).gamma, gp2 = greens_matrix(p, a + 2 * h, a).gamma;
    Mat3 fd{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        fd[r][c] = (gm2[r][c] - 8.0 * gm1[r][c] + 8.0 * gp1[r][c] - gp2[r][c]) / (12.0 * h) * k3 / rho - (r == c);
    CHECK(max_abs(fd) <= 1e-8);
  }
}

TEST_CASE("homogeneous solutions solve the variational equation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ue(0.01, 0.9), ud(-0.25, 0.25), ua(-6.0, 6.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto p = OrbitParams::from_energy(1.0, ue(rng), ud(rng));
    const double a = ua(rng);
    for (int j = 0; j < 6; ++j) {
      auto X = [&](double s) { return to_inertial(frame(p, s), homogeneous_solutions(p, s).h[j]); };
      worst = std::fmax(worst, variational_residual(p, X, a));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("Green's matrix matches a numerically propagated impulse") {
  for (double eps : {0.0, 0.3, 0.7})
    for (double d : {0.0, 0.15, -0.2}) {
      const auto p = OrbitParams::from_energy(1.2, eps, d, 0.4);
      const double b = 0.6, a = 5.1;
      const GreensEval g = greens_matrix(p, a, b);
      const Mat3 ea = frame(p, a), eb = frame(p, b);
      Mat3 G{};  // inertial response, column j = kick along axis j
      for (int j = 0; j < 3; ++j) {
        const Vec3 x = impulse_response(p, b, a, j, 4000);
        for (int i = 0; i < 3; ++i) G[i][j] = x[i];
      }
      CHECK(G[0][0] + G[1][1] + G[2][2] == doctest::Approx(g.g).epsilon(1e-8));
      // Comoving components: Gamma[m][n] = e_m(a) . G e_n(b).
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
          const Vec3 col = G * eb[n];
          CHECK(dot(ea[m], col) == doctest::Approx(g.gamma[m][n]).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("trace is invariant under rotation of the orbit in its plane") {
  for (double chi : {0.7, 2.9, -1.4}) {
    const auto p0 = OrbitParams::from_energy(1.1, 0.5, 0.1, 0.0);
    const auto p1 = OrbitParams::from_energy(1.1, 0.5, 0.1, chi);
    CHECK(trace_g(p1, 2.0, -0.7) == doctest::Approx(trace_g(p0, 2.0, -0.7)).epsilon(1e-13));
    CHECK(gdot_subtracted(p1, 2.0, -0.7) == doctest::Approx(gdot_subtracted(p0, 2.0, -0.7)).epsilon(1e-13));
  }
}

TEST_CASE("compact form equals the assembled trace for d = 0") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ue(0.0, 0.95), ua(-8.0, 8.0);
  for (int i = 0; i < 100; ++i) {
    const auto p = OrbitParams::from_energy(1.0, ue(rng));
    const double a = ua(rng), b = ua(rng);
    const double c = trace_g_compact(p, a, b), t = trace_g(p, a, b);
    CHECK(std::fabs(c - t) <= 1e-10 * (1.0 + std::fabs(t)));
  }
}

TEST_CASE("short-lag behaviour of gdot") {
  // d = 0: the subtracted derivative cancels through u^3.
  const auto p0 = OrbitParams::from_energy(1.0, 0.5);
  const double a = 1.1;
  std::vector<double> lx, ly;
  for (double h = 0.05; h <= 0.4; h *= 1.25) {
    lx.push_back(std::log(h));
    ly.push_back(std::log(std::fabs(gdot_subtracted(p0, a, a - h))));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  CHECK(sxy / sxx >= 3.9);

  // d != 0: leading coefficient d / (2 r^4).
  for (double d : {0.1, -0.15}) {
    const auto p = OrbitParams::from_energy(1.0, 0.4, d);
    const double r = orbit_state(p, a).r, h = 1e-3;
    const double u = (h - p.eps * (std::sin(a) - std::sin(a - h))) / (p.k * p.k * p.k);
    const double c2 = gdot_subtracted(p, a, a - h) / (u * u);
    CHECK(c2 == doctest::Approx(d / (2.0 * std::pow(r, 4))).epsilon(0.01));
    CHECK(short_lag_coefficients(p, a).c2 == doctest::Approx(d / (2.0 * std::pow(r, 4))).epsilon(1e-12));
  }
}

TEST_CASE("anomaly series agrees with the direct evaluation") {
  for (double d : {0.0, 0.12}) {
    const auto p = OrbitParams::from_energy(1.0, 0.6, d);
    const double a = 0.8;
    const auto c = gdot_anomaly_series(p, a);
    for (double h : {0.05, 0.1}) {
      double s = 0.0;
      for (int n = 19; n >= 0; --n) s = s * h + c[n];
      const double direct = gdot_subtracted(p, a, a - h);
      CHECK(s == doctest::Approx(direct).epsilon(1e-6));
    }
  }
}

TEST_CASE("the odd cubic short-lag term averages out over a period") {
  const auto p = OrbitParams::from_energy(1.0, 0.6, 0.1);
  const int n = 512;
  double s = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    const double v = short_lag_coefficients(p, a).c3 * (1.0 - p.eps * std::cos(a));
    s += v;
    scale += std::fabs(v);
  }
  CHECK(std::fabs(s) <= 1e-12 * scale);
  CHECK(short_lag_coefficients(OrbitParams::from_energy(1.0, 0.6), 0.5).c3 == 0.0);
}

TEST_CASE("field gain integrand is continuous across the series guard") {
  const auto p = OrbitParams::from_energy(1.0, std::sqrt(1.0 - 0.3 * 0.3));
  const double a = 0.4, g = diagonal_guard(p, a);
  const double in = field_gain_integrand(p, a, a - g * (1.0 - 1e-9));
  const double out = field_gain_integrand(p, a, a - g * (1.0 + 1e-9));
  CHECK(in == doctest::Approx(out).epsilon(1e-8));
}
