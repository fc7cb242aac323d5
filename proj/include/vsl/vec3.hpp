#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace vsl {

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr double& operator()(std::size_t i, std::size_t j) { return a[3 * i + j]; }
  constexpr double operator()(std::size_t i, std::size_t j) const { return a[3 * i + j]; }

  constexpr Mat3& operator+=(const Mat3& o) {
    for (std::size_t k = 0; k < 9; ++k) a[k] += o.a[k];
    return *this;
  }
  constexpr Mat3& operator*=(double s) {
    for (auto& e : a) e *= s;
    return *this;
  }
  constexpr double trace() const { return a[0] + a[4] + a[8]; }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator-(Mat3 m, const Mat3& o) {
  for (std::size_t k = 0; k < 9; ++k) m.a[k] -= o.a[k];
  return m;
}

/// Frobenius norm.
inline double norm(const Mat3& m) {
  double s = 0.0;
  for (double e : m.a) s += e * e;
  return std::sqrt(s);
}

}  // namespace vsl
