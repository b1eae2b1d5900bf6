#include "spinn/autodiff/jet.hpp"

#include "spinn/common/error.hpp"

#include <string>

namespace spinn::ad {

Jet2 operator/(const Jet2& a, const Jet2& b) {
  if (b.v == 0.0) throw Error(ErrorKind::DivisionByZero, "jet division by zero");
  const double inv = 1.0 / b.v;
  // 1/b as a jet, then a * (1/b)
  const Jet2 r = chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
  return a * r;
}

namespace {
double ipow(double x, int n) {
  double r = 1.0;
  const bool neg = n < 0;
  unsigned m = static_cast<unsigned>(neg ? -n : n);
  double base = x;
  while (m) {
    if (m & 1U) r *= base;
    base *= base;
    m >>= 1U;
  }
  return neg ? 1.0 / r : r;
}

}  // namespace

UnaryDerivs unary_derivatives(Op op, double v, int n) {
  switch (op) {
    case Op::tanh: {
      const double y = std::tanh(v);
      const double g1 = 1.0 - y * y;
      return {y, g1, -2.0 * y * g1, g1 * (6.0 * y * y - 2.0)};
    }
    case Op::exp: {
      const double e = std::exp(v);
      return {e, e, e, e};
    }
    case Op::sin: {
      const double s = std::sin(v), c = std::cos(v);
      return {s, c, -s, -c};
    }
    case Op::cos: {
      const double s = std::sin(v), c = std::cos(v);
      return {c, -s, -c, s};
    }
    case Op::neg: return {-v, -1.0, 0.0, 0.0};
    case Op::pow_int: {
      if (n < 0 && v == 0.0) throw Error(ErrorKind::DomainError, "negative power of zero");
      const double fn = n;
      const double g0 = ipow(v, n);
      const double g1 = n == 0 ? 0.0 : fn * ipow(v, n - 1);
      const double g2 = (n == 0 || n == 1) ? 0.0 : fn * (fn - 1.0) * ipow(v, n - 2);
      const double g3 = (n >= 0 && n <= 2) ? 0.0 : fn * (fn - 1.0) * (fn - 2.0) * ipow(v, n - 3);
      return {g0, g1, g2, g3};
    }
    default: break;
  }
  throw Error(ErrorKind::DomainError, "not a unary op");
}

Jet2 pow_int(const Jet2& x, int n) {
  const UnaryDerivs d = unary_derivatives(Op::pow_int, x.v, n);
  return chain(x, d.g0, d.g1, d.g2);
}

int arity(Op op) noexcept {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: return 2;
    default: return 1;
  }
}

Jet2 apply_elementary(Op op, std::span<const Jet2> args, int exponent) {
  if (static_cast<int>(args.size()) != arity(op))
    throw Error(ErrorKind::DomainError,
                "op expects " + std::to_string(arity(op)) + " operands, got " +
                    std::to_string(args.size()));
  switch (op) {
    case Op::add: return args[0] + args[1];
    case Op::sub: return args[0] - args[1];
    case Op::mul: return args[0] * args[1];
    case Op::div: return args[0] / args[1];
    default: break;
  }
  const UnaryDerivs d = unary_derivatives(op, args[0].v, exponent);
  return chain(args[0], d.g0, d.g1, d.g2);
}

Jet2 unary_partial(Op op, const Jet2& x, int exponent) {
  const UnaryDerivs d = unary_derivatives(op, x.v, exponent);
  return chain(x, d.g1, d.g2, d.g3);
}

}  // namespace spinn::ad
