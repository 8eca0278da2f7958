#pragma once

#include <cstddef>
#include <vector>

#include "operquant/oper.hpp"
#include "operquant/types.hpp"

namespace oq {

// Polygonal path in the u-plane. For closed paths the last vertex must
// coincide with the first; every segment must keep the clearance distance
// from all punctures.
struct PathSpec {
  std::vector<cplx> vertices;
  bool closed = false;
};

struct TransportOptions {
  double rel_tol = 1e-12;       // per-segment relative error target
  double abs_tol = 1e-14;
  double clearance = 0.0;       // 0: default 1e-3 * min puncture separation
  double clearance_factor = 1e-3;
  int threads = 1;              // loop-level parallelism in monodromy_rep
};

double effective_clearance(const OperConfig& config, const TransportOptions& opts);

// Throws if a segment of the path comes closer than the clearance to any
// puncture.
void check_clearance(const OperConfig& config, const PathSpec& path, double clearance);

// Parallel transport of a fundamental solution pair of
// eps1^2 psi'' + t psi = 0 along the path, in the frame y = (psi, eps1 psi').
// Returns M with y(end) = M y(start); composition rule:
// transport(P1 then P2) = transport(P2) * transport(P1).
Mat2 transport(const Oper& oper, const PathSpec& path, const TransportOptions& opts = {});

// Ordered loop matrices, one positively oriented simple loop per puncture,
// all based at basepoint. With punctures ordered by angle as seen from the
// basepoint, M_n * ... * M_1 = identity.
struct MonodromyRep {
  cplx basepoint{};
  std::vector<Mat2> matrices;
};

// Default basepoint: centroid of the punctures offset by i * (max pairwise
// distance).
cplx default_basepoint(const OperConfig& config);

// Keyhole loop around puncture r based at basepoint: spur to the circle of
// radius 0.1 * (nearest other puncture distance), one counterclockwise
// 16-gon turn, spur back.
PathSpec keyhole_loop(const OperConfig& config, std::size_t r, cplx basepoint);

// Closed polygonal loop (32-gon) around exactly the punctures i and j,
// counterclockwise; errors if no separating circle exists.
PathSpec pair_loop(const OperConfig& config, std::size_t i, std::size_t j);

MonodromyRep monodromy_rep(const Oper& oper, const TransportOptions& opts = {});
MonodromyRep monodromy_rep(const Oper& oper, cplx basepoint, const TransportOptions& opts = {});

// || M_n * ... * M_1 - identity ||_F
double cyclic_residual(const MonodromyRep& rep);

// The seven invariants for n = 4 (L_1..L_4, L_s, L_t, L_u); for n = 3 only
// the single-loop traces. Ls = tr M1 M2, Lt = tr M1 M3, Lu = tr M2 M3.
struct TraceCoordinates {
  std::vector<cplx> L;
  cplx Ls{}, Lt{}, Lu{};
  bool has_pairwise = false;
};

TraceCoordinates trace_coordinates(const MonodromyRep& rep);

// LHS - RHS of the quartic surface equation satisfied by the seven trace
// functions of an irreducible rank-2 system with four singular points.
cplx quartic_residual(const TraceCoordinates& tc);

}  // namespace oq
