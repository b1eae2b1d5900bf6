#pragma once

#include "spinn/model/blocks.hpp"

#include <string_view>

namespace spinn::oracle {

enum class PdeKind { heat, allen_cahn };

std::string_view to_string(PdeKind k);
/// Throws InvalidVariant on unknown names.
PdeKind parse_pde(std::string_view s);

/// u_t = coeff * Lap u            (heat, coeff = alpha)
/// u_t = coeff * Lap u + u - u^3  (Allen-Cahn, coeff = epsilon)
struct PdeSpec {
  PdeKind kind = PdeKind::heat;
  double coeff = 0.01;
  model::Geometry geometry = model::Geometry::interval;
  double T = 0.5;

  /// Throws ConfigError unless coeff > 0 and T > 0.
  void validate() const;
  /// Reaction term f(u); zero for heat.
  [[nodiscard]] double reaction(double u) const { return kind == PdeKind::allen_cahn ? u - u * u * u : 0.0; }
  /// f'(u).
  [[nodiscard]] double reaction_slope(double u) const { return kind == PdeKind::allen_cahn ? 1.0 - 3.0 * u * u : 0.0; }
};

}  // namespace spinn::oracle
