#pragma once

#include <cmath>
#include <span>

namespace spinn::ad {

/// Second-order forward jet: value plus first and second derivative along one
/// seeded input direction.
///
/// Arithmetic follows the truncated Taylor rules exactly. A jet can also be read
/// as an element of R[e]/(e^3) with x = v + d1 e + d2/2 e^2, which is what makes
/// "partials are jets" work in the reverse sweep (see Tape).
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Jet2() = default;
  constexpr Jet2(double value) : v(value) {}  // NOLINT: constants convert implicitly
  constexpr Jet2(double value, double first, double second) : v(value), d1(first), d2(second) {}
};

enum class Component { value, d1, d2 };

constexpr double component(const Jet2& j, Component c) {
  switch (c) {
    case Component::value: return j.v;
    case Component::d1: return j.d1;
    case Component::d2: return j.d2;
  }
  return j.v;
}

/// (value, 1, 0) for the active direction, (value, 0, 0) otherwise.
constexpr Jet2 jet_seed(double value, bool direction_active) {
  return {value, direction_active ? 1.0 : 0.0, 0.0};
}

/// Chain rule for a scalar function g given g(v), g'(v), g''(v).
constexpr Jet2 chain(const Jet2& x, double g0, double g1, double g2) {
  return {g0, g1 * x.d1, g1 * x.d2 + g2 * x.d1 * x.d1};
}

constexpr Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
constexpr Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
constexpr Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }
constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet2& operator+=(Jet2& a, const Jet2& b) { return a = a + b; }
inline Jet2& operator-=(Jet2& a, const Jet2& b) { return a = a - b; }
inline Jet2& operator*=(Jet2& a, const Jet2& b) { return a = a * b; }

/// Throws DivisionByZero when b.v == 0.
Jet2 operator/(const Jet2& a, const Jet2& b);

inline Jet2 tanh(const Jet2& x) {
  const double y = std::tanh(x.v);
  const double g1 = 1.0 - y * y;
  return chain(x, y, g1, -2.0 * y * g1);
}
inline Jet2 exp(const Jet2& x) {
  const double e = std::exp(x.v);
  return chain(x, e, e, e);
}
inline Jet2 sin(const Jet2& x) {
  const double s = std::sin(x.v);
  return chain(x, s, std::cos(x.v), -s);
}
inline Jet2 cos(const Jet2& x) {
  const double c = std::cos(x.v);
  return chain(x, c, -std::sin(x.v), -c);
}

/// x^n for integer n. Negative n at x == 0 throws DomainError.
Jet2 pow_int(const Jet2& x, int n);

enum class Op { add, sub, mul, div, tanh, exp, sin, cos, pow_int, neg };

/// Number of operands an elementary op consumes.
int arity(Op op) noexcept;

/// g, g', g'', g''' of a unary op at a scalar point.
struct UnaryDerivs {
  double g0, g1, g2, g3;
};
UnaryDerivs unary_derivatives(Op op, double v, int exponent = 0);

/// Dispatches one elementary op on jets. `exponent` is only read for pow_int.
Jet2 apply_elementary(Op op, std::span<const Jet2> args, int exponent = 0);

/// Derivative of a unary op as a jet: g'(x) propagated with the same Taylor rules.
/// This is the local partial a tape stores for unary nodes.
Jet2 unary_partial(Op op, const Jet2& x, int exponent = 0);

}  // namespace spinn::ad
