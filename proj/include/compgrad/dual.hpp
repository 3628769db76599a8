#pragma once

// Forward-mode automatic differentiation with dual numbers. Environment step
// functions are templated on the scalar type; instantiating them with Dual
// and seeding one input direction at a time yields exact per-sample gradients
// of the closed-form dynamics.

#include <cmath>

namespace compgrad {

struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // tangent

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit from constants
  Dual(double value, double tangent) : v(value), d(tangent) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a) { return a; }

// Branching compares on values only; derivative information does not leak
// across branch boundaries.
inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual sin(const Dual& x) { return {std::sin(x.v), x.d * std::cos(x.v)}; }
inline Dual cos(const Dual& x) { return {std::cos(x.v), -x.d * std::sin(x.v)}; }
inline Dual tan(const Dual& x) {
  const double c = std::cos(x.v);
  return {std::tan(x.v), x.d / (c * c)};
}
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.v);
  return {e, x.d * e};
}
inline Dual log(const Dual& x) { return {std::log(x.v), x.d / x.v}; }
inline Dual sqrt(const Dual& x) {
  const double s = std::sqrt(x.v);
  return {s, x.d / (2.0 * s)};
}
inline Dual tanh(const Dual& x) {
  const double t = std::tanh(x.v);
  return {t, x.d * (1.0 - t * t)};
}
inline Dual abs(const Dual& x) { return x.v < 0.0 ? -x : x; }
inline Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }
inline Dual min(const Dual& a, const Dual& b) { return a.v <= b.v ? a : b; }

// Clamp with zero derivative on the saturated branches; boundary ties
// saturate, so a degenerate interval never leaks a tangent.
inline Dual clamp(const Dual& x, const Dual& lo, const Dual& hi) {
  if (x.v <= lo.v) return lo;
  if (x.v >= hi.v) return hi;
  return x;
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

// Exact-match double overloads so scalar-templated dynamics resolve
// unqualified math calls for both scalar types.
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tan(double x) { return std::tan(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double abs(double x) { return std::fabs(x); }
inline double max(double a, double b) { return a >= b ? a : b; }
inline double min(double a, double b) { return a <= b ? a : b; }
inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace compgrad
