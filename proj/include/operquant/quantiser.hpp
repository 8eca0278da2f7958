#pragma once

#include <array>
#include <string>
#include <vector>

#include "operquant/fenchel_nielsen.hpp"
#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/sov.hpp"
#include "operquant/types.hpp"

namespace oq {

// Integer label of a candidate spectral point: Re lambda = 2 pi n and
// Re kappa = nu pi m on the cutting curve; nu = 1 for the four-punctured
// sphere, nu = 2 for the once-punctured torus lattice.
struct QuantLabel {
  long n = 0;
  long m = 0;
  int nu = 1;
};

struct SolveOptions {
  double tol = 1e-9;              // sup-norm target for the residual pair
  int max_iter = 50;
  double fd_step = 1e-6;          // finite-difference scale, times (1 + |E|)
  double trace_reality_tol = 1e-7;
  double surface_tol = 1e-6;      // passed through to the trace inversion
  TransportOptions transport{};
};

// Completes the accessory vector from its free head: the last three entries
// are determined by the regularity-at-infinity constraints, a 3x3 linear
// system with Vandermonde determinant (never singular for distinct
// punctures). free_values.size() must equal n - 3.
AccessoryVector reduce_accessory(const OperConfig& config,
                                 const std::vector<cplx>& free_values);

// One evaluation of the composite map E -> monodromy -> traces -> (lambda,
// kappa). The tracker (optional) keeps the branch continuous across calls.
struct LambdaFrame {
  AccessoryVector accessory;
  MonodromyRep rep;
  TraceCoordinates traces;
  FNCoords fn;
};

LambdaFrame lambda_of_E(const OperConfig& config, const std::vector<cplx>& free_values,
                        FnTracker* tracker, const SolveOptions& opts = {});

// (Re lambda - 2 pi n, Re kappa - nu pi m).
std::array<double, 2> quantisation_residual(const FNCoords& fn, const QuantLabel& label);

struct SpectrumPoint {
  QuantLabel label;
  std::vector<cplx> eigenvalues;  // free accessory parameters at the solution
  AccessoryVector accessory;      // full constrained vector
  FNCoords fn;
  TraceCoordinates traces;
  std::array<double, 2> residual{};
  int iterations = 0;
  HolonomyClass holonomy = HolonomyClass::NONE;
  Mat2 hermitian_form;            // invariant form when one exists
  Mat2 realiser;                  // maps the holonomy to real matrices (SL2R only)
  double trace_reality = 0.0;     // max |Im| over the seven traces
  bool accepted = false;          // converged and holonomy is SL2R
  std::string warning;
};

// Damped Newton iteration on the free accessory parameter of a four-puncture
// configuration, driving the quantisation residual below tol. Throws on
// non-convergence or a singular Jacobian; a converged point with the wrong
// holonomy class is returned with accepted = false and a warning.
SpectrumPoint solve_spectrum(const OperConfig& config, const QuantLabel& label,
                             const std::vector<cplx>& initial_free,
                             const SolveOptions& opts = {});

// Inverse of lambda_of_E on a four-puncture configuration: finds the free
// accessory value with lambda(E) = lambda_target on the tracked branch.
// A fresh tracker is seeded at (lambda_target, kappa = 0).
struct InverseFrame {
  AccessoryVector accessory;
  cplx free_value;
  FNCoords fn;
};

InverseFrame E_of_lambda(const OperConfig& config, cplx lambda_target, cplx free_seed,
                         FnTracker* tracker, const SolveOptions& opts = {});

}  // namespace oq
