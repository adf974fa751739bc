#pragma once

namespace rnr {

// Natural units (c = hbar = 1) are the default everywhere; both constants are
// carried explicitly so results can be re-expressed in any coherent unit system.
struct Units {
  double c = 1.0;
  double hbar = 1.0;
};

constexpr Units natural_units() { return Units{1.0, 1.0}; }

}  // namespace rnr
