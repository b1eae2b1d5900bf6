#include "spinn/autodiff/fd_check.hpp"

#include "spinn/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace spinn::ad {

double relative_error(double computed, double reference) {
  const double diff = std::abs(computed - reference);
  const double scale = std::max(std::abs(computed), std::abs(reference));
  if (scale < 1e-12) return diff;
  return diff / scale;
}

FdCheckResult finite_diff_check(const JetFunction& f, double x, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::DomainError, "finite difference step must be positive");
  const Jet2 at = f(jet_seed(x, true));
  const double fp = f(Jet2(x + h)).v;
  const double fm = f(Jet2(x - h)).v;
  const double f0 = f(Jet2(x)).v;
  const double first = (fp - fm) / (2.0 * h);
  const double second = (fp - 2.0 * f0 + fm) / (h * h);
  return {relative_error(at.d1, first), relative_error(at.d2, second)};
}

}  // namespace spinn::ad
