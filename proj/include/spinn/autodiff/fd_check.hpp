#pragma once

#include "spinn/autodiff/jet.hpp"

#include <functional>

namespace spinn::ad {

using JetFunction = std::function<Jet2(const Jet2&)>;

struct FdCheckResult {
  double first_rel_error = 0.0;
  double second_rel_error = 0.0;
  [[nodiscard]] double max() const {
    return first_rel_error > second_rel_error ? first_rel_error : second_rel_error;
  }
};

/// Relative difference with an absolute fallback when both sides are ~0.
double relative_error(double computed, double reference);

/// Compares jet derivatives of f at x against central differences with step h.
FdCheckResult finite_diff_check(const JetFunction& f, double x, double h);

}  // namespace spinn::ad
