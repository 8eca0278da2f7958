#pragma once

#include <algorithm>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/quantiser.hpp"

namespace oqtest {

using oq::cplx;

inline double dist(cplx a, cplx b) { return std::abs(a - b); }

// Four real punctures with a tight s-channel pair; the Newton solver and the
// reality checks are well conditioned here (labels (1,0), (1,1), (1,2) sit at
// moderate trace magnitudes).
inline oq::OperConfig reference_config() {
  oq::OperConfig cfg;
  cfg.epsilon1 = 1.0;
  cfg.punctures = {{cplx(0.0, 0.0), cplx(0.16, 0.0), {}},
                   {cplx(0.15, 0.0), cplx(0.16, 0.0), {}},
                   {cplx(1.0, 0.0), cplx(0.16, 0.0), {}},
                   {cplx(3.0, 0.0), cplx(0.16, 0.0), {}}};
  return cfg;
}

inline oq::SolveOptions tight_solve_options() {
  oq::SolveOptions so;
  so.transport.rel_tol = 1e-13;
  so.transport.abs_tol = 1e-15;
  return so;
}

// Random puncture positions in a centered box, rejected until all pairwise
// separations clear min_sep; deterministic in the engine state.
inline std::vector<cplx> random_positions(std::mt19937_64& rng, std::size_t n,
                                          double box, double min_sep) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<cplx> z;
  while (z.size() < n) {
    const cplx c(u(rng), u(rng));
    bool ok = true;
    for (const cplx& p : z) {
      if (std::abs(c - p) < min_sep) ok = false;
    }
    if (ok) z.push_back(c);
  }
  return z;
}

// Weights in a band bounded away from both the resonant points (where
// rho+ - rho- is an integer) and the parabolic value 1/4.
inline cplx random_weight(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> re(0.03, 0.21);
  std::uniform_real_distribution<double> im(-0.02, 0.02);
  return {re(rng), im(rng)};
}

// Orders positions counterclockwise as seen from the default basepoint of
// their configuration; keyhole loops in this order compose to the identity.
inline void sort_by_angle(std::vector<cplx>& z) {
  oq::OperConfig probe;
  for (const cplx& p : z) probe.punctures.push_back({p, cplx(0.1, 0.0), {}});
  const cplx bp = oq::default_basepoint(probe);
  std::sort(z.begin(), z.end(), [bp](cplx a, cplx b) {
    return std::arg(a - bp) < std::arg(b - bp);
  });
}

// Distance from the keyhole spur toward z[r] to the other punctures.
inline double spur_clearance(const std::vector<cplx>& z, std::size_t r, cplx bp) {
  double best = std::numeric_limits<double>::infinity();
  const cplx ab = z[r] - bp;
  const double len2 = std::norm(ab);
  for (std::size_t s = 0; s < z.size(); ++s) {
    if (s == r) continue;
    const double t = std::clamp(((z[s] - bp) * std::conj(ab)).real() / len2, 0.0, 1.0);
    best = std::min(best, std::abs(z[s] - (bp + t * ab)));
  }
  return best;
}

struct EnsembleDraw {
  oq::OperConfig config;
  oq::AccessoryVector accessory;
};

// Draws a constraint-satisfying 4-puncture oper kept in the regime where the
// monodromy identities are checkable in double precision. The determinant of
// a stored matrix is only defined to |M|^2 eps, so draws are rejected when
// the dependent accessory parameters grow large or a keyhole spur hugs a
// foreign puncture; both inflate the transported solution norms and with
// them every downstream cancellation. Callers should still discard reps
// whose matrices exceed norm ~1e3 for the same reason.
inline EnsembleDraw random_constrained_oper(std::mt19937_64& rng, double box,
                                            double min_sep) {
  std::uniform_real_distribution<double> eu(-0.4, 0.4);
  for (int attempt = 0; attempt < 400; ++attempt) {
    oq::OperConfig cfg;
    auto z = random_positions(rng, 4, box, min_sep);
    sort_by_angle(z);
    for (const cplx& p : z) cfg.punctures.push_back({p, random_weight(rng), {}});
    const oq::AccessoryVector acc = oq::reduce_accessory(cfg, {cplx(eu(rng), eu(rng))});

    double max_e = 0.0;
    for (const cplx& e : acc.values) max_e = std::max(max_e, std::abs(e));
    if (max_e > 0.8) continue;

    const cplx bp = oq::default_basepoint(cfg);
    double clear = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < z.size(); ++r)
      clear = std::min(clear, spur_clearance(z, r, bp));
    if (clear < 0.25 * min_sep) continue;

    return {cfg, acc};
  }
  throw std::runtime_error("random_constrained_oper: no admissible draw in 400 attempts");
}

}  // namespace oqtest
