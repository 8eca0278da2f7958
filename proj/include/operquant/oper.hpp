#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "operquant/types.hpp"

namespace oq {

// One regular singular point of the projective connection t(u):
// t has a double pole with coefficient delta and a simple pole with the
// accessory parameter at z. If spin is set, delta is derived from it as
// delta = eps1^2 * spin * (spin + 1) during validation.
struct Puncture {
  cplx z{};
  cplx delta{};
  std::optional<cplx> spin{};
};

struct OperConfig {
  cplx epsilon1{1.0};
  std::vector<Puncture> punctures;

  std::size_t size() const { return punctures.size(); }
};

// Validates invariants (eps1 != 0, n >= 3, distinct positions) and resolves
// spins into deltas. Returns the normalized config.
OperConfig validate_config(OperConfig config);

// Smallest pairwise distance between puncture positions.
double min_separation(const OperConfig& config);

// Single-pole coefficients E_r of t at the punctures, in puncture order.
struct AccessoryVector {
  std::vector<cplx> values;
};

// The projective connection t(u) = sum_r [delta_r/(u-z_r)^2 + E_r/(u-z_r)].
struct Oper {
  OperConfig config;
  AccessoryVector accessory;
};

// Validation wrapper: shape checks only, infinity constraints are reported
// separately by infinity_constraints_residual.
Oper build_oper(OperConfig config, AccessoryVector accessory);

cplx eval_t(const Oper& oper, cplx u);

// (sum E_r, sum (E_r z_r + delta_r), sum (E_r z_r^2 + 2 delta_r z_r));
// all three vanish iff t(u) = O(u^-4) at infinity.
std::array<cplx, 3> infinity_constraints_residual(const Oper& oper);

struct LocalExponents {
  cplx rho_plus;
  cplx rho_minus;
  cplx m;               // branch: Im m >= 0, Re m in [0,1)
  cplx predicted_trace; // exp(2 pi i rho+) + exp(2 pi i rho-)
  bool resonant;        // rho+ - rho- integral: possible logarithmic monodromy
};

// Indicial exponents at puncture r: eps1^2 rho (rho - 1) + delta_r = 0.
LocalExponents local_exponents(const Oper& oper, std::size_t r);

}  // namespace oq
