#include "operquant/special.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace oq {
namespace {

constexpr double kLogTwoPiHalf = 0.91893853320467274178032973640562;  // log(2 pi)/2

// B_{2k} / (2k (2k - 1)) for the Stirling tail, k = 1..10.
constexpr double kStirling[] = {
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
};

cplx stirling_log_gamma(cplx z) {
  const cplx lz = std::log(z);
  cplx sum = (z - 0.5) * lz - z + kLogTwoPiHalf;
  const cplx w = 1.0 / (z * z);
  cplx pow = 1.0 / z;
  for (double c : kStirling) {
    sum += c * pow;
    pow *= w;
  }
  return sum;
}

}  // namespace

cplx log_gamma(cplx z) {
  if (std::isnan(z.real()) || std::isnan(z.imag())) {
    fail_invalid("log_gamma: NaN argument");
  }
  // Shift until Re z is large enough for Stirling (the series degrades
  // toward the negative axis). The shift logs stay off the cut whenever z
  // does, so the recurrence preserves the principal branch.
  cplx shift = 0.0;
  int guard = 0;
  while (z.real() < 12.0) {
    if (std::abs(z) == 0.0 ||
        (z.imag() == 0.0 && z.real() == std::floor(z.real()) && z.real() < 0.5)) {
      fail_invalid("log_gamma: pole at a nonpositive integer");
    }
    shift += std::log(z);
    z += 1.0;
    if (++guard > 100000) fail_numerical("log_gamma: shift recurrence did not terminate");
  }
  return stirling_log_gamma(z) - shift;
}

cplx integrate_segment(const std::function<cplx(cplx)>& f, cplx a, cplx b,
                       const QuadOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_level < 2) {
    fail_invalid("integrate_segment: bad quadrature options");
  }
  const cplx mid = 0.5 * (a + b);
  const cplx half = 0.5 * (b - a);
  if (std::abs(half) == 0.0) return 0.0;

  const auto finite = [](cplx v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  };
  const cplx at_mid = f(mid);
  if (!finite(at_mid)) {
    fail_numerical("integrate_segment: integrand returned a non-finite value");
  }

  // Sum of w(t) f(x(t)) over nodes t = j h, x = tanh((pi/2) sinh t).
  const double h0 = 1.0;
  double h = h0;
  cplx total = at_mid * (0.5 * 3.14159265358979323846);  // j = 0 term, weight pi/2
  cplx prev_estimate = 0.0;
  bool have_prev = false;

  for (int level = 0; level <= opts.max_level; ++level) {
    if (level > 0) h *= 0.5;
    // At each level add the new nodes (odd multiples of h for level > 0;
    // all j >= 1 at level 0).
    const int stride = (level == 0) ? 1 : 2;
    const int start = (level == 0) ? 1 : 1;
    cplx added = 0.0;
    for (int j = start;; j += stride) {
      const double t = j * h;
      const double sh = std::sinh(t);
      const double ch = std::cosh(t);
      const double u = 0.5 * 3.14159265358979323846 * sh;
      const double csh = std::cosh(u);
      const double weight = 0.5 * 3.14159265358979323846 * ch / (csh * csh);
      if (weight < 1e-300) break;
      // 1 - tanh(u) carries the node's distance from the endpoint at full
      // relative accuracy; mid + half*tanh(u) would round onto the endpoint
      // once tanh(u) is within an ulp of 1, clipping the level far too early
      // for integrands singular there.
      const double xm = 2.0 / (1.0 + std::exp(2.0 * u));
      if (xm == 0.0) break;
      // The two abscissae are handled one-sidedly: once an abscissa rounds
      // back onto its endpoint it has run out of doubles, so that side's
      // remaining tail (below weight ~ xm) is dropped without sampling f,
      // which may be singular exactly there.
      const cplx pb = b - half * xm;
      const cplx pa = a + half * xm;
      cplx node = 0.0;
      bool live = false;
      if (pb != b) {
        const cplx vb = f(pb);
        if (!finite(vb)) {
          fail_numerical("integrate_segment: integrand returned a non-finite value");
        }
        node += vb;
        live = true;
      }
      if (pa != a) {
        const cplx va = f(pa);
        if (!finite(va)) {
          fail_numerical("integrate_segment: integrand returned a non-finite value");
        }
        node += va;
        live = true;
      }
      if (!live) break;
      added += weight * node;
      if (t > 6.5) break;
    }
    total += added;
    const cplx estimate = total * h * half;
    if (have_prev) {
      const double diff = std::abs(estimate - prev_estimate);
      if (diff <= opts.tol * std::max(1.0, std::abs(estimate))) {
        return estimate;
      }
    }
    prev_estimate = estimate;
    have_prev = true;
  }
  fail_numerical("integrate_segment: quadrature did not converge");
}

}  // namespace oq
