#pragma once

#include <array>
#include <utility>

#include "operquant/monodromy.hpp"
#include "operquant/types.hpp"

namespace oq {

// Complex length/twist pair (lambda, kappa) for one cutting curve.
// Trace functions are invariant under (lambda, kappa) -> (lambda + 4 pi a,
// kappa + 2 pi nu b) and under the simultaneous flip (lambda, kappa) ->
// (-lambda, -kappa); nu = 1 for the four-punctured sphere channel, nu = 2 for
// the once-punctured torus.
struct FNCoords {
  cplx lambda{};
  cplx kappa{};
  int nu = 1;
};

// Branch-continuity state for inversions along a parameter path: the branch
// (lattice shift and Weyl flip) is chosen to minimize |d lambda|, then
// |d kappa|, against the previous sample. One owner thread at a time.
struct FnTracker {
  bool has_prev = false;
  cplx lambda_prev{};
  cplx kappa_prev{};
};

// Forward parameterisation of the trace surface for the four-punctured
// sphere, s-channel pairing punctures (1,2):
//   Ls = 2 cos(lambda/2),  D = Ls^2 - 4,
//   p = L2 L3 + L1 L4,  q = L1 L3 + L2 L4,
//   cb_ij = Ls^2 + Li^2 + Lj^2 - Ls Li Lj - 4,
//   S = sqrt(cb12) sqrt(cb34)           (principal branches),
//   Lt = (Ls p - 2 q + 2 cos(kappa) S) / D,
//   Lu = (Ls q - 2 p - 2 cos(kappa + lambda/2) S) / D.
// The output satisfies the quartic surface equation identically.
TraceCoordinates fn_to_traces(const FNCoords& fn, const std::array<cplx, 4>& boundary);

// Inverse map: lambda = 2 arccos(Ls/2) (principal, or continuity-tracked),
// kappa from the Lt equation with the sign fixed by the Lu equation.
// Rejects off-surface inputs (quartic residual beyond surface_tol) and the
// degenerate locus |Ls -+ 2| < 1e-8.
FNCoords traces_to_fn(const TraceCoordinates& tc, int nu = 1, FnTracker* tracker = nullptr,
                      double surface_tol = 1e-6);

// Torus variant: La = 2 cos(lambda/2),
// Lb = 2 cos(kappa/2) sqrt(La^2 + L0 - 2) / sqrt(La^2 - 4), principal roots;
// L0 is the boundary trace. Lattice period of kappa is 4 pi (nu = 2).
std::pair<cplx, cplx> torus_fn_to_traces(cplx lambda, cplx kappa, cplx L0);

}  // namespace oq
