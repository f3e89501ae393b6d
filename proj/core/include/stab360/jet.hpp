#pragma once

// Minimal forward-mode dual numbers for residual Jacobians.

#include <cmath>

#include <Eigen/Core>

namespace stab360 {

template <int N>
struct Jet {
  using Grad = Eigen::Matrix<double, N, 1>;

  double a = 0.0;
  Grad v = Grad::Zero();

  Jet() = default;
  Jet(double value) : a(value) {}  // NOLINT(google-explicit-constructor)
  Jet(double value, int k) : a(value) { v[k] = 1.0; }
  Jet(double value, const Grad& grad) : a(value), v(grad) {}

  Jet& operator+=(const Jet& o) { a += o.a; v += o.v; return *this; }
  Jet& operator-=(const Jet& o) { a -= o.a; v -= o.v; return *this; }
  Jet& operator*=(const Jet& o) { *this = *this * o; return *this; }
  Jet& operator/=(const Jet& o) { *this = *this / o; return *this; }
};

template <int N> Jet<N> operator-(const Jet<N>& x) { return {-x.a, Eigen::Matrix<double, N, 1>(-x.v)}; }
template <int N> Jet<N> operator+(const Jet<N>& x, const Jet<N>& y) { return {x.a + y.a, Eigen::Matrix<double, N, 1>(x.v + y.v)}; }
template <int N> Jet<N> operator-(const Jet<N>& x, const Jet<N>& y) { return {x.a - y.a, Eigen::Matrix<double, N, 1>(x.v - y.v)}; }
template <int N> Jet<N> operator*(const Jet<N>& x, const Jet<N>& y) {
  return {x.a * y.a, Eigen::Matrix<double, N, 1>(y.a * x.v + x.a * y.v)};
}
template <int N> Jet<N> operator/(const Jet<N>& x, const Jet<N>& y) {
  const double inv = 1.0 / y.a;
  const double q = x.a * inv;
  return {q, Eigen::Matrix<double, N, 1>((x.v - q * y.v) * inv)};
}
template <int N> Jet<N> operator+(const Jet<N>& x, double s) { return {x.a + s, x.v}; }
template <int N> Jet<N> operator+(double s, const Jet<N>& x) { return {x.a + s, x.v}; }
template <int N> Jet<N> operator-(const Jet<N>& x, double s) { return {x.a - s, x.v}; }
template <int N> Jet<N> operator-(double s, const Jet<N>& x) { return {s - x.a, Eigen::Matrix<double, N, 1>(-x.v)}; }
template <int N> Jet<N> operator*(const Jet<N>& x, double s) { return {x.a * s, Eigen::Matrix<double, N, 1>(x.v * s)}; }
template <int N> Jet<N> operator*(double s, const Jet<N>& x) { return {x.a * s, Eigen::Matrix<double, N, 1>(x.v * s)}; }
template <int N> Jet<N> operator/(const Jet<N>& x, double s) { return {x.a / s, Eigen::Matrix<double, N, 1>(x.v / s)}; }
template <int N> Jet<N> operator/(double s, const Jet<N>& x) {
  const double q = s / x.a;
  return {q, Eigen::Matrix<double, N, 1>(-q / x.a * x.v)};
}

template <int N> Jet<N> sqrt(const Jet<N>& x) {
  const double s = std::sqrt(x.a);
  return {s, Eigen::Matrix<double, N, 1>(x.v / (2.0 * s))};
}
template <int N> Jet<N> sin(const Jet<N>& x) { return {std::sin(x.a), Eigen::Matrix<double, N, 1>(std::cos(x.a) * x.v)}; }
template <int N> Jet<N> cos(const Jet<N>& x) { return {std::cos(x.a), Eigen::Matrix<double, N, 1>(-std::sin(x.a) * x.v)}; }
template <int N> Jet<N> exp(const Jet<N>& x) {
  const double e = std::exp(x.a);
  return {e, Eigen::Matrix<double, N, 1>(e * x.v)};
}

inline double value_of(double x) { return x; }
template <int N> double value_of(const Jet<N>& x) { return x.a; }

}  // namespace stab360
