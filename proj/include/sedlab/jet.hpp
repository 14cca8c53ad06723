#pragma once

// Truncated Taylor series in one variable. Used to evaluate integrands whose
// leading orders cancel analytically near a diagonal: every coefficient is
// computed directly, so the cancellation happens term by term instead of in
// floating point differences of O(1) numbers.
//
// The coefficient type S may itself be a Jet, giving series in two variables.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

#ifdef __SIZEOF_FLOAT128__
#include <quadmath.h>
#define SEDLAB_HAVE_FLOAT128 1
#endif

namespace sedlab {

// Overloads so that templated code can call these on plain doubles too.
inline void sincos(double u, double& s, double& c) {
  s = std::sin(u);
  c = std::cos(u);
}
inline void sincos(long double u, long double& s, long double& c) {
  s = std::sin(u);
  c = std::cos(u);
}
inline double atan2_generic(double y, double x) { return std::atan2(y, x); }
inline long double atan2_generic(long double y, long double x) { return std::atan2(y, x); }
inline double atan_generic(double x) { return std::atan(x); }
inline long double atan_generic(long double x) { return std::atan(x); }
inline double sqrt_generic(double x) { return std::sqrt(x); }
inline long double sqrt_generic(long double x) { return std::sqrt(x); }
template <class T>
  requires std::is_class_v<T>
T atan_generic(const T& x) {
  return atan(x);
}
template <class T>
  requires std::is_class_v<T>
T sqrt_generic(const T& x) {
  return sqrt(x);
}

#ifdef SEDLAB_HAVE_FLOAT128
using quad = __float128;
inline quad sin(quad x) { return sinq(x); }
inline quad cos(quad x) { return cosq(x); }
inline quad atan(quad x) { return atanq(x); }
inline quad sqrt(quad x) { return sqrtq(x); }
inline void sincos(quad u, quad& s, quad& c) { sincosq(u, &s, &c); }
inline quad atan2_generic(quad y, quad x) { return atan2q(y, x); }
inline quad atan_generic(quad x) { return atanq(x); }
inline quad sqrt_generic(quad x) { return sqrtq(x); }
#endif

template <std::size_t N, class S = double>
class Jet {
  static_assert(N >= 1);

 public:
  static constexpr std::size_t order = N;
  using coefficient_type = S;

  constexpr Jet() : c_{} {}
  constexpr Jet(double value) : c_{} { c_[0] = S(value); }  // NOLINT: constants mix freely
  template <class U = S, class = std::enable_if_t<!std::is_same_v<U, double>>>
  constexpr Jet(const S& value) : c_{} {  // NOLINT
    c_[0] = value;
  }

  // x0 + slope * h, the expansion variable itself.
  static Jet variable(const S& x0, double slope = 1.0) {
    Jet j(x0);
    if constexpr (N > 1) j.c_[1] = S(slope);
    return j;
  }

  const S& operator[](std::size_t n) const { return c_[n]; }
  S& operator[](std::size_t n) { return c_[n]; }
  const S& value() const { return c_[0]; }

  // Sum of c_n h^n.
  S eval(double h) const {
    S s(0.0);
    for (std::size_t n = N; n-- > 0;) s = s * h + c_[n];
    return s;
  }

  // Divide by h^K, dropping the first K coefficients (which the caller asserts vanish).
  template <std::size_t K>
  Jet<N - K, S> shift_down() const {
    Jet<N - K, S> r;
    for (std::size_t n = 0; n < N - K; ++n) r[n] = c_[n + K];
    return r;
  }

  // d/dh, with the top coefficient set to zero.
  Jet derivative() const {
    Jet r;
    for (std::size_t n = 1; n < N; ++n) r.c_[n - 1] = c_[n] * static_cast<double>(n);
    return r;
  }

  // Antiderivative with the given constant term.
  Jet integrate(const S& c0) const {
    Jet r(c0);
    for (std::size_t n = 1; n < N; ++n) r.c_[n] = c_[n - 1] * (1.0 / static_cast<double>(n));
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t n = 0; n < N; ++n) c_[n] += o.c_[n];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t n = 0; n < N; ++n) c_[n] -= o.c_[n];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(Jet x, const Jet& y) { return x += y; }
  friend Jet operator-(Jet x, const Jet& y) { return x -= y; }
  friend Jet operator+(Jet x, double y) {
    x.c_[0] += y;
    return x;
  }
  friend Jet operator+(double y, Jet x) { return x + y; }
  friend Jet operator-(Jet x, double y) {
    x.c_[0] -= y;
    return x;
  }
  friend Jet operator-(double y, Jet x) { return -x + y; }
  friend Jet operator-(Jet x) {
    for (auto& v : x.c_) v = -v;
    return x;
  }
  friend Jet operator*(Jet x, double s) { return x *= s; }
  friend Jet operator*(double s, Jet x) { return x *= s; }
  friend Jet operator/(Jet x, double s) { return x *= 1.0 / s; }

  friend Jet operator*(const Jet& x, const Jet& y) {
    Jet r;
    for (std::size_t n = 0; n < N; ++n) {
      S s = x.c_[0] * y.c_[n];
      for (std::size_t k = 1; k <= n; ++k) s += x.c_[k] * y.c_[n - k];
      r.c_[n] = s;
    }
    return r;
  }

  friend Jet operator/(const Jet& x, const Jet& y) {
    Jet q;
    const S inv0 = S(1.0) / y.c_[0];
    for (std::size_t n = 0; n < N; ++n) {
      S s = x.c_[n];
      for (std::size_t k = 1; k <= n; ++k) s -= y.c_[k] * q.c_[n - k];
      q.c_[n] = s * inv0;
    }
    return q;
  }
  friend Jet operator/(double s, const Jet& y) { return Jet(s) / y; }

  friend void sincos(const Jet& u, Jet& s, Jet& c) {
    sincos(u.c_[0], s.c_[0], c.c_[0]);
    for (std::size_t n = 1; n < N; ++n) {
      S ss(0.0), cc(0.0);
      for (std::size_t k = 1; k <= n; ++k) {
        const S ku = u.c_[k] * static_cast<double>(k);
        ss += ku * c.c_[n - k];
        cc -= ku * s.c_[n - k];
      }
      s.c_[n] = ss * (1.0 / static_cast<double>(n));
      c.c_[n] = cc * (1.0 / static_cast<double>(n));
    }
  }
  friend Jet sin(const Jet& u) {
    Jet s, c;
    sincos(u, s, c);
    return s;
  }
  friend Jet cos(const Jet& u) {
    Jet s, c;
    sincos(u, s, c);
    return c;
  }
  friend Jet atan(const Jet& u) {
    const Jet w = 1.0 / (1.0 + u * u);
    return (u.derivative() * w).integrate(atan_generic(u.c_[0]));
  }
  // Branch follows std::atan2 at the expansion point.
  friend Jet atan2_generic(const Jet& y, const Jet& x) {
    const Jet w = 1.0 / (x * x + y * y);
    return ((x * y.derivative() - y * x.derivative()) * w)
        .integrate(atan2_generic(y.c_[0], x.c_[0]));
  }
  friend Jet sqrt(const Jet& u) {
    Jet s(sqrt_generic(u.c_[0]));
    const S inv = S(0.5) / s.c_[0];
    for (std::size_t n = 1; n < N; ++n) {
      S t = u.c_[n];
      for (std::size_t k = 1; k < n; ++k) t -= s.c_[k] * s.c_[n - k];
      s.c_[n] = t * inv;
    }
    return s;
  }

 private:
  std::array<S, N> c_;
};

// Leading (value) coefficient through any nesting depth.
inline double scalar_value(double x) { return x; }
inline double scalar_value(long double x) { return static_cast<double>(x); }
#ifdef SEDLAB_HAVE_FLOAT128
inline double scalar_value(quad x) { return static_cast<double>(x); }
#endif
template <std::size_t N, class S>
double scalar_value(const Jet<N, S>& x) {
  return scalar_value(x.value());
}

}  // namespace sedlab
