#pragma once

#include <array>
#include <string>
#include <vector>

#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/types.hpp"

namespace oq {

enum class HolonomyClass { SL2R, SU2, REDUCIBLE, NONE };

const char* to_string(HolonomyClass c);

// Result of solving M_r^dagger H M_r = H for Hermitian H over all generators.
// H is Frobenius-normalized; for a one-dimensional solution space the class
// follows the signature of H: (1,1) -> SL2R, definite -> SU2, singular ->
// REDUCIBLE. No solution -> NONE; two or more independent solutions, or a
// common eigenvector of all generators, -> REDUCIBLE.
struct HolonomyForm {
  HolonomyClass cls = HolonomyClass::NONE;
  Mat2 H;                          // valid when cls is SL2R or SU2
  std::array<double, 4> svals{};   // singular values of the stacked system
  int nullity = 0;
};

HolonomyForm invariant_hermitian_form(const std::vector<Mat2>& matrices,
                                      double rel_tol = 1e-5);
HolonomyForm invariant_hermitian_form(const MonodromyRep& rep, double rel_tol = 1e-5);

// || M^dagger C M - C ||_F for a candidate invariant form C.
double form_residual(const Mat2& M, const Mat2& C);

// For H with signature (1,1): a change of basis g with g M g^{-1} real
// (entrywise) for every M preserving H. Deterministic in H.
Mat2 sl2r_realiser(const Mat2& H);

// Transports the given closed loop and reports ||M^dagger C M - C||_F,
// the single-valuedness defect of the density |psi|^2-pairing under C.
double single_valuedness_residual(const Oper& oper, const PathSpec& loop, const Mat2& C,
                                  const TransportOptions& opts = {});

// Separated-variable momenta p_r = u0 prod_k (z_r - u_k) / prod_{s!=r} (z_r - z_s)
// at each of the finite punctures z_r.
std::vector<cplx> sov_momenta(const std::vector<cplx>& z, cplx u0,
                              const std::vector<cplx>& u);

// Product-form kernel evaluated through log-magnitudes:
//   |sum_r x_r prod_k (z_r - u_k) / prod_{s!=r} (z_r - z_s)|^{2J}
//   * prod_r |prod_{s!=r} (z_r - z_s) / prod_k (z_r - u_k)|^{2(j_r + 1)}
//   * prod_{k<l} |u_k - u_l|^2.
// Complex exponents give a complex value of unit-modulus phase times the
// real magnitude; a vanishing base with negative-real-part exponent is an
// error naming the offending factor, with zero exponent the factor is 1.
// A variable sitting exactly on z_r makes the position factor singular
// unless 2(j_r + 1) is zero (factor 1) or has negative real part (kernel 0).
cplx sov_kernel(const std::vector<cplx>& x, const std::vector<cplx>& u,
                const std::vector<cplx>& z, const std::vector<cplx>& j, cplx J);

}  // namespace oq
