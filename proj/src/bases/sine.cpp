#include "spinn/bases/sine.hpp"

#include "spinn/common/error.hpp"

#include <numbers>
#include <string>

namespace spinn::bases {

void SineBasisSpec::validate() const {
  if (K < 1 || L < 2) throw Error(ErrorKind::InvalidShape, "sine basis needs K >= 1 and L >= 2");
  if (L < 2 * K + 1)
    throw Error(ErrorKind::InvalidShape, "sine basis with K=" + std::to_string(K) + " needs L >= " +
                                             std::to_string(2 * K + 1));
}

double sine_eval(int k, double x) { return std::sin(2.0 * std::numbers::pi * k * x); }

Eigen::MatrixXd sine_design(const SineBasisSpec& spec) {
  Eigen::MatrixXd a(spec.L, spec.K);
  for (int j = 0; j < spec.L; ++j)
    for (int k = 1; k <= spec.K; ++k) a(j, k - 1) = sine_eval(k, spec.node(j));
  return a;
}

SineTransform::SineTransform(const SineBasisSpec& spec) : spec_(spec) {
  if (spec.K < 1 || spec.L < 1) throw Error(ErrorKind::InvalidShape, "empty sine basis");
  const Eigen::MatrixXd a = sine_design(spec);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  if (cod.rank() < spec.K)
    throw Error(ErrorKind::RankDeficient, "sine design matrix has rank " + std::to_string(cod.rank()) +
                                              " < K=" + std::to_string(spec.K));
  pinv_ = cod.pseudoInverse();
}

Eigen::VectorXd SineTransform::apply(std::span<const double> samples) const {
  if (static_cast<int>(samples.size()) != spec_.L)
    throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(spec_.L) + " samples");
  return pinv_ * Eigen::Map<const Eigen::VectorXd>(samples.data(), spec_.L);
}

Eigen::VectorXd sine_transform(std::span<const double> samples, const SineBasisSpec& spec) {
  return SineTransform(spec).apply(samples);
}

double sine_reconstruct(std::span<const double> coeffs, double x) {
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * sine_eval(static_cast<int>(k) + 1, x);
  return s;
}

}  // namespace spinn::bases
