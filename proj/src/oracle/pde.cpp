#include "spinn/oracle/pde.hpp"

#include "spinn/common/error.hpp"

#include <string>

namespace spinn::oracle {

std::string_view to_string(PdeKind k) { return k == PdeKind::heat ? "heat" : "allen_cahn"; }

PdeKind parse_pde(std::string_view s) {
  if (s == "heat") return PdeKind::heat;
  if (s == "allen_cahn") return PdeKind::allen_cahn;
  throw Error(ErrorKind::InvalidVariant, "unknown pde '" + std::string(s) + "'");
}

void PdeSpec::validate() const {
  if (!(coeff > 0.0)) throw Error(ErrorKind::ConfigError, "pde coefficient must be positive");
  if (!(T > 0.0)) throw Error(ErrorKind::ConfigError, "pde horizon T must be positive");
}

}  // namespace spinn::oracle
