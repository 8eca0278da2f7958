#pragma once

#include <functional>

#include "operquant/types.hpp"

namespace oq {

// Principal branch of log Gamma, analytic on C minus the cut (-inf, 0];
// real on the positive reals. On the cut the sign of Im z (IEEE signed
// zero included) selects the side. Accuracy ~1e-14 relative away from
// the nonpositive-integer poles.
cplx log_gamma(cplx z);

struct QuadOptions {
  double tol = 1e-12;   // stop when successive levels agree to this
  int max_level = 11;   // tanh-sinh halvings; 2^11 nodes per unit step
};

// Tanh-sinh quadrature of f along the straight segment [a, b].
// Integrable endpoint singularities (log or power with exponent > -1)
// are handled; interior singularities are not. Throws on non-convergence
// or non-finite samples.
cplx integrate_segment(const std::function<cplx(cplx)>& f, cplx a, cplx b,
                       const QuadOptions& opts = {});

}  // namespace oq
