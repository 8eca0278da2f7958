#include "operquant/fenchel_nielsen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace oq {
namespace {

constexpr double kDegenerateTol = 1e-8;
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kFourPi = 2.0 * kTwoPi;

void check_not_degenerate(cplx half_trace_of_cut, const char* what) {
  if (std::abs(half_trace_of_cut - 2.0) < kDegenerateTol ||
      std::abs(half_trace_of_cut + 2.0) < kDegenerateTol) {
    fail_numerical(std::string(what) +
                   ": degenerate locus, cutting-curve trace at +-2 (parabolic)");
  }
}

// Real inputs land exactly on the sqrt/acos branch cuts, where the result
// would follow the sign of an incidental zero; pin the cut to the Im >= 0
// side so real configurations evaluate deterministically.
cplx pos_cut(cplx v) { return v.imag() == 0.0 ? cplx(v.real(), 0.0) : v; }

struct SurfaceFrame {
  cplx D;      // Ls^2 - 4
  cplx p;      // L2 L3 + L1 L4
  cplx q;      // L1 L3 + L2 L4
  cplx S;      // sqrt(cb12) sqrt(cb34), principal roots
};

SurfaceFrame surface_frame(cplx Ls, const std::array<cplx, 4>& L) {
  SurfaceFrame f;
  f.D = Ls * Ls - 4.0;
  f.p = L[1] * L[2] + L[0] * L[3];
  f.q = L[0] * L[2] + L[1] * L[3];
  const cplx cb12 = Ls * Ls + L[0] * L[0] + L[1] * L[1] - Ls * L[0] * L[1] - 4.0;
  const cplx cb34 = Ls * Ls + L[2] * L[2] + L[3] * L[3] - Ls * L[2] * L[3] - 4.0;
  f.S = std::sqrt(pos_cut(cb12)) * std::sqrt(pos_cut(cb34));
  return f;
}

cplx lt_of(const SurfaceFrame& f, cplx Ls, cplx kappa) {
  return (Ls * f.p - 2.0 * f.q + 2.0 * std::cos(kappa) * f.S) / f.D;
}

cplx lu_of(const SurfaceFrame& f, cplx Ls, cplx lambda, cplx kappa) {
  return (Ls * f.q - 2.0 * f.p - 2.0 * std::cos(kappa + 0.5 * lambda) * f.S) / f.D;
}

double trace_scale(const TraceCoordinates& tc) {
  double m = 1.0;
  for (const cplx& v : tc.L) m = std::max(m, std::abs(v));
  m = std::max({m, std::abs(tc.Ls), std::abs(tc.Lt), std::abs(tc.Lu)});
  return m * m * m * m;
}

}  // namespace

TraceCoordinates fn_to_traces(const FNCoords& fn, const std::array<cplx, 4>& boundary) {
  const cplx Ls = 2.0 * std::cos(0.5 * fn.lambda);
  check_not_degenerate(Ls, "fn_to_traces");
  const SurfaceFrame f = surface_frame(Ls, boundary);

  TraceCoordinates tc;
  tc.L.assign(boundary.begin(), boundary.end());
  tc.Ls = Ls;
  tc.Lt = lt_of(f, Ls, fn.kappa);
  tc.Lu = lu_of(f, Ls, fn.lambda, fn.kappa);
  tc.has_pairwise = true;
  return tc;
}

FNCoords traces_to_fn(const TraceCoordinates& tc, int nu, FnTracker* tracker,
                      double surface_tol) {
  if (tc.L.size() != 4 || !tc.has_pairwise) {
    fail_invalid("traces_to_fn: needs four boundary traces and all pairwise traces");
  }
  if (nu != 1 && nu != 2) fail_invalid("traces_to_fn: nu must be 1 or 2");
  if (!(surface_tol > 0.0)) fail_invalid("traces_to_fn: surface_tol must be positive");

  const double residual = std::abs(quartic_residual(tc));
  if (residual > surface_tol * trace_scale(tc)) {
    fail_invalid("traces_to_fn: traces violate the quartic surface relation (residual " +
                 std::to_string(residual) + ")");
  }
  check_not_degenerate(tc.Ls, "traces_to_fn");

  const std::array<cplx, 4> L{tc.L[0], tc.L[1], tc.L[2], tc.L[3]};
  const SurfaceFrame f = surface_frame(tc.Ls, L);
  const double scale = std::max(1.0, std::abs(f.D));
  if (std::abs(f.S) <= 1e-10 * scale) {
    fail_invalid("traces_to_fn: twist is undetermined (vanishing boundary discriminant)");
  }

  const cplx lambda0 = 2.0 * std::acos(pos_cut(0.5 * tc.Ls));
  const cplx cos_kappa = (tc.Lt * f.D - tc.Ls * f.p + 2.0 * f.q) / (2.0 * f.S);
  const cplx kappa0 = std::acos(pos_cut(cos_kappa));

  // acos fixes kappa up to sign; the u-channel trace breaks the tie.
  cplx kappa_hat = kappa0;
  {
    const double rp = std::abs(lu_of(f, tc.Ls, lambda0, kappa0) - tc.Lu);
    const double rm = std::abs(lu_of(f, tc.Ls, lambda0, -kappa0) - tc.Lu);
    if (rm < rp) kappa_hat = -kappa0;
    const double best = std::min(rp, rm);
    if (best > 100.0 * surface_tol * (1.0 + std::abs(tc.Lu))) {
      fail_invalid("traces_to_fn: pairwise traces are mutually inconsistent");
    }
  }

  FNCoords out;
  out.nu = nu;
  if (tracker == nullptr || !tracker->has_prev) {
    out.lambda = lambda0;
    out.kappa = kappa_hat;
  } else {
    // Pick the Weyl flip and lattice shifts closest to the previous sample,
    // lambda first, kappa as tie-break between near-equal flips.
    const double period_k = kTwoPi * nu;
    double best_dl = 0.0, best_dk = 0.0;
    bool first = true;
    for (int s : {+1, -1}) {
      const cplx lb = double(s) * lambda0;
      const cplx kb = double(s) * kappa_hat;
      const long a0 = std::lround((tracker->lambda_prev.real() - lb.real()) / kFourPi);
      for (long da = -1; da <= 1; ++da) {
        const cplx lam = lb + kFourPi * double(a0 + da);
        const double dl = std::abs(lam - tracker->lambda_prev);
        const long b0 = std::lround((tracker->kappa_prev.real() - kb.real()) / period_k);
        for (long db = -1; db <= 1; ++db) {
          const cplx kap = kb + period_k * double(b0 + db);
          const double dk = std::abs(kap - tracker->kappa_prev);
          const bool better =
              first || dl < best_dl - 1e-12 * (1.0 + best_dl) ||
              (dl <= best_dl + 1e-12 * (1.0 + best_dl) && dk < best_dk);
          if (better) {
            best_dl = dl;
            best_dk = dk;
            out.lambda = lam;
            out.kappa = kap;
            first = false;
          }
        }
      }
    }
  }

  if (tracker != nullptr) {
    tracker->has_prev = true;
    tracker->lambda_prev = out.lambda;
    tracker->kappa_prev = out.kappa;
  }
  return out;
}

std::pair<cplx, cplx> torus_fn_to_traces(cplx lambda, cplx kappa, cplx L0) {
  const cplx La = 2.0 * std::cos(0.5 * lambda);
  check_not_degenerate(La, "torus_fn_to_traces");
  const cplx Lb = 2.0 * std::cos(0.5 * kappa) * std::sqrt(pos_cut(La * La + L0 - 2.0)) /
                  std::sqrt(pos_cut(La * La - 4.0));
  return {La, Lb};
}

}  // namespace oq
