#include "spinn/bases/sphere.hpp"

#include "spinn/common/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace spinn::bases {

using ad::Jet2;

double SphereBasisSpec::theta(int j) const { return std::numbers::pi * j / (n_theta - 1); }
double SphereBasisSpec::phi(int k) const { return 2.0 * std::numbers::pi * k / n_phi; }

std::pair<int, int> sph_degree_order(int index) {
  const int l = static_cast<int>(std::floor(std::sqrt(static_cast<double>(index))));
  return {l, index - l * l - l};
}

namespace {

void check_order(int l, int m) {
  if (l < 0 || m < 0 || m > l)
    throw Error(ErrorKind::InvalidOrder, "invalid (l, m) = (" + std::to_string(l) + ", " + std::to_string(m) + ")");
}

/// P_l^m(cos t) with sin t supplied separately so that jets stay polynomial.
template <typename T>
T legendre_cs(int l, int m, const T& x, const T& s) {
  // P_m^m = (-1)^m (2m-1)!! s^m
  T pmm = T(1.0);
  double fact = 1.0;
  for (int i = 1; i <= m; ++i) {
    pmm = pmm * T(-fact) * s;
    fact += 2.0;
  }
  if (l == m) return pmm;
  T pm1 = x * T(2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pm1;
  T pll = T(0.0);
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = (x * T(2.0 * ll - 1.0) * pm1 - T(ll + m - 1.0) * pmm) * T(1.0 / (ll - m));
    pmm = pm1;
    pm1 = pll;
  }
  return pll;
}

double norm_factor(int l, int m) {
  // sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)
  double ratio = 1.0;
  for (int i = l - m + 1; i <= l + m; ++i) ratio /= i;
  return std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * ratio);
}

template <typename T, typename Trig>
T real_sph_harm_impl(int l, int m, const T& theta, const T& phi, Trig trig) {
  const int am = m < 0 ? -m : m;
  check_order(l, am);
  const T x = trig.cos(theta);
  const T s = trig.sin(theta);
  // Complex Y_l^m = N P_l^m (CS phase inside P) e^{i m phi}; the real recombination
  // multiplies by sqrt(2) (-1)^m, so the two signs cancel for m != 0.
  const T p = legendre_cs(l, am, x, s);
  const double sign = (am % 2 == 0) ? 1.0 : -1.0;
  const double n = norm_factor(l, am);
  if (m == 0) return T(n) * p;
  const double c = std::numbers::sqrt2 * n * sign;
  if (m > 0) return T(c) * p * trig.cos(T(static_cast<double>(am)) * phi);
  return T(c) * p * trig.sin(T(static_cast<double>(am)) * phi);
}

struct DoubleTrig {
  double cos(double v) const { return std::cos(v); }
  double sin(double v) const { return std::sin(v); }
};
struct JetTrig {
  Jet2 cos(const Jet2& v) const { return ad::cos(v); }
  Jet2 sin(const Jet2& v) const { return ad::sin(v); }
};

}  // namespace

double assoc_legendre(int l, int m, double x) {
  check_order(l, m);
  if (x < -1.0 || x > 1.0) throw Error(ErrorKind::DomainError, "Legendre argument outside [-1, 1]");
  return legendre_cs(l, m, x, std::sqrt((1.0 - x) * (1.0 + x)));
}

double real_sph_harm(int l, int m, double theta, double phi) {
  return real_sph_harm_impl(l, m, theta, phi, DoubleTrig{});
}

Jet2 real_sph_harm(int l, int m, const Jet2& theta, const Jet2& phi) {
  return real_sph_harm_impl(l, m, theta, phi, JetTrig{});
}

double sphere_laplacian_check(int l, int m, double theta, double phi) {
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-6) throw Error(ErrorKind::PoleSingularity, "Laplacian evaluated at a pole");
  const Jet2 by_theta = real_sph_harm(l, m, ad::jet_seed(theta, true), ad::jet_seed(phi, false));
  const Jet2 by_phi = real_sph_harm(l, m, ad::jet_seed(theta, false), ad::jet_seed(phi, true));
  return by_theta.d2 + std::cos(theta) / s * by_theta.d1 + by_phi.d2 / (s * s);
}

double sphere_eval(std::span<const double> coeffs, double theta, double phi) {
  double sum = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const auto [l, m] = sph_degree_order(static_cast<int>(i));
    sum += coeffs[i] * real_sph_harm(l, m, theta, phi);
  }
  return sum;
}

Eigen::MatrixXd sphere_design(const SphereBasisSpec& spec) {
  if (spec.degree < 0 || spec.n_theta < 2 || spec.n_phi < 1)
    throw Error(ErrorKind::InvalidShape, "invalid sphere basis spec");
  Eigen::MatrixXd a(spec.samples(), spec.count());
  for (int j = 0; j < spec.n_theta; ++j)
    for (int k = 0; k < spec.n_phi; ++k)
      for (int i = 0; i < spec.count(); ++i) {
        const auto [l, m] = sph_degree_order(i);
        a(j * spec.n_phi + k, i) = real_sph_harm(l, m, spec.theta(j), spec.phi(k));
      }
  return a;
}

SphereTransform::SphereTransform(const SphereBasisSpec& spec) : spec_(spec), design_(sphere_design(spec)) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design_);
  if (cod.rank() < spec.count())
    throw Error(ErrorKind::RankDeficient, "sphere grid resolves rank " + std::to_string(cod.rank()) + " of " +
                                              std::to_string(spec.count()) + " harmonics");
  pinv_ = cod.pseudoInverse();
}

Eigen::VectorXd SphereTransform::apply(std::span<const double> samples) const {
  if (static_cast<int>(samples.size()) != spec_.samples())
    throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(spec_.samples()) + " samples");
  return pinv_ * Eigen::Map<const Eigen::VectorXd>(samples.data(), spec_.samples());
}

Eigen::VectorXd sphere_transform(std::span<const double> samples, const SphereBasisSpec& spec) {
  return SphereTransform(spec).apply(samples);
}

}  // namespace spinn::bases
