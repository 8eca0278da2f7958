#pragma once

#include <functional>
#include <string>
#include <vector>

#include "operquant/oper.hpp"
#include "operquant/quantiser.hpp"
#include "operquant/types.hpp"

namespace oq {

struct UpsilonOptions {
  double tol = 1e-11;           // per-segment quadrature tolerance
  double deform = 0.75;         // height of the rectangular detour
  double pole_clearance = 0.1;  // straight path must stay this far from integers
};

// Upsilon(x) = int_{1/2}^x log(Gamma(u)/Gamma(1-u)) du along a canonical
// path: straight when it stays clear of the integrand's logarithmic
// singularities at the integers, otherwise a rectangular detour displaced
// into Im > 0 (for real x; into the half-plane of x otherwise). Endpoint
// log singularities (integer x) are integrable and handled. The reflection
// identity Upsilon(1-x) = Upsilon(x) holds whenever the mirrored path is
// also canonical (inside the strip or off the real axis).
cplx upsilon_cl(cplx x, const UpsilonOptions& opts = {});

// Complex length coordinates of a pair of pants; l3 is the leg that enters
// the vertex function unsigned.
struct PantsLengths {
  cplx l1{};
  cplx l2{};
  cplx l3{};
};

// Vertex function
//   N = (1/2) sum_{s1,s2 = +-} Upsilon(1/2 + (i/4pi)(s1 l1 + s2 l2 + l3))
//     - (1/2) sum_{i=1..3} Re Upsilon(1 + (i/2pi) l_i),
// symmetric in (l1, l2) and under sign flips of l1 or l2; real for real l.
cplx pants_N(const PantsLengths& l, const UpsilonOptions& opts = {});

// Four-puncture family for generating-function increments: the puncture at
// moving_index carries the modulus q as its position; the free accessory
// parameter is adjusted so the cutting-curve length matches lambda.
struct WFamily {
  OperConfig base;
  std::size_t moving_index = 1;
};

struct WPathPoint {
  cplx lambda;
  cplx q;
};

struct WPathSample {
  std::vector<WPathPoint> path;  // evaluated samples in path order
  std::vector<cplx> kappa;       // twist at each sample
  std::vector<cplx> E;           // accessory value at the moving puncture
  cplx increment{};              // Delta W along the path
  cplx increment_scaled{};       // 4 pi i * Delta W
  int levels = 0;                // refinement levels used
};

// Integrates dW = E dq + (i/4pi) kappa dlambda along the polyline through
// the given waypoints, solving E(lambda, q) at each quadrature sample with
// branch continuity seeded from the nearest already-computed sample.
// Composite trapezoid with doubling and a terminal Richardson step; refines
// until successive levels agree to quad_tol.
WPathSample w_increment(const WFamily& family, const std::vector<WPathPoint>& waypoints,
                        cplx free_seed, const SolveOptions& solve_opts = {},
                        double quad_tol = 1e-7);

// Small-q nodal prediction: (delta(l) - delta(l1) - delta(l2)) log q plus
// the sum of vertex functions. delta is caller-supplied.
cplx w_nodal_asymptotics(cplx l, cplx l1, cplx l2, const std::vector<PantsLengths>& pants,
                         cplx q, const std::function<cplx(cplx)>& delta,
                         const UpsilonOptions& opts = {});

}  // namespace oq
