#pragma once

#include <array>
#include <cmath>

namespace sedlab {

template <class T>
using Vec3T = std::array<T, 3>;
using Vec3 = Vec3T<double>;
using Mat3 = std::array<Vec3, 3>;

inline Vec3 operator+(const Vec3& x, const Vec3& y) { return {x[0] + y[0], x[1] + y[1], x[2] + y[2]}; }
inline Vec3 operator-(const Vec3& x, const Vec3& y) { return {x[0] - y[0], x[1] - y[1], x[2] - y[2]}; }
inline Vec3 operator*(double s, const Vec3& x) { return {s * x[0], s * x[1], s * x[2]}; }
inline Vec3& operator+=(Vec3& x, const Vec3& y) {
  for (int i = 0; i < 3; ++i) x[i] += y[i];
  return x;
}
inline double dot(const Vec3& x, const Vec3& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; }
inline double norm(const Vec3& x) { return std::sqrt(dot(x, x)); }
inline Vec3 cross(const Vec3& x, const Vec3& y) {
  return {x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
}

inline Mat3 zero_mat3() { return Mat3{}; }
inline Mat3 identity_mat3() {
  Mat3 m{};
  m[0][0] = m[1][1] = m[2][2] = 1.0;
  return m;
}
inline Vec3 operator*(const Mat3& m, const Vec3& x) {
  return {dot(m[0], x), dot(m[1], x), dot(m[2], x)};
}
inline double max_abs(const Mat3& m) {
  double r = 0.0;
  for (const auto& row : m)
    for (double v : row) r = std::fmax(r, std::fabs(v));
  return r;
}

}  // namespace sedlab
