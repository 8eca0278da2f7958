#pragma once

#include <array>
#include <string>
#include <vector>

#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/types.hpp"

namespace oq {

// Classical curve v^2 = t_cl(u),
//   t_cl(u) = poly(u) + sum_r [ lsq[r]/(u - z[r])^2 + H[r]/(u - z[r]) ],
// with eps-independent coefficients (lsq = squared classical lengths, H =
// classical accessory values). poly holds ascending powers and lets pure
// polynomial curves be expressed with no poles at all. cycles are declared
// by the caller as closed polygons; a cycle for period extraction should
// encircle a branch-point pair an even number of crossings away.
struct SpectralCurveData {
  std::vector<cplx> z;
  std::vector<cplx> lsq;
  std::vector<cplx> H;
  std::vector<cplx> poly;
  std::vector<PathSpec> cycles;
};

cplx eval_classical_t(const SpectralCurveData& curve, cplx u);

// Zeros of t_cl: roots of the cleared numerator after removing spurious
// factors at pole sites, each certified simple (pairwise separation bounded
// below). Throws on a multiple root (degenerate curve) or identically zero t.
std::vector<cplx> branch_points(const SpectralCurveData& curve);

struct PeriodPair {
  cplx a;
  cplx aD;
};
struct RealActionPair {
  double b;
  double bD;
};
RealActionPair real_actions(const PeriodPair& pp);

// Contour integral of v du along the closed polygonal cycle with the branch
// of v = sqrt(t_cl) continued by proximity from node to node, refining where
// it rotates too fast. The branch starts at the principal square root at the
// first vertex and must return to it; a sign flip after the full circuit
// (odd number of enclosed branch points) is an error, as is a cycle passing
// too near a pole or branch point.
cplx period(const SpectralCurveData& curve, const PathSpec& cycle, double tol = 1e-10);

// (Re a - eps1 pi n, Re aD - eps1 pi m).
std::array<double, 2> bs_residual(const PeriodPair& pp, double eps1, long n, long m);

struct WkbRow {
  double eps;
  cplx trace;       // Tr of the checked loop at this eps
  cplx log_branch;  // log(trace) on the branch nearest i*a/eps
  double err;       // |eps * log_branch - i * a|
};
struct WkbTable {
  cplx a;  // classical period of the matching cycle
  std::vector<WkbRow> rows;
  std::string warning;  // set (and rows empty) when a = 0 and the check is skipped
};

// Semiclassical trace check: builds quantum opers over the classical data
// with delta_r(eps) = lsq_r - eps * l_r and accessory values held at H,
// transports the loop around punctures (i, j), and tabulates
// err(eps) = |eps log Tr - i a| for the decreasing eps list.
WkbTable wkb_trace_check(const SpectralCurveData& classical, const std::vector<cplx>& l,
                         const std::vector<double>& eps_list, const PathSpec& cycle,
                         std::size_t i = 0, std::size_t j = 1,
                         const TransportOptions& opts = {});

}  // namespace oq
