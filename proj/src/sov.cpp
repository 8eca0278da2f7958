#include "operquant/sov.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace oq {
namespace {

// Hermitian basis: H = x0 B0 + x1 B1 + x2 B2 + x3 B3 with real x.
Mat2 hermitian_from_coeffs(const Eigen::Vector4d& x) {
  Mat2 H;
  H.a = x[0];
  H.d = x[1];
  H.b = cplx(x[2], x[3]);
  H.c = cplx(x[2], -x[3]);
  return H;
}

// Rows of the real-linear map H -> M^dagger H M - H in the basis above,
// reading off (re f00, re f11, re f01, im f01) of the Hermitian image.
void append_rows(Eigen::MatrixXd& A, int row0, const Mat2& M) {
  for (int col = 0; col < 4; ++col) {
    Eigen::Vector4d e = Eigen::Vector4d::Zero();
    e[col] = 1.0;
    const Mat2 B = hermitian_from_coeffs(e);
    const Mat2 F = dagger(M) * B * M - B;
    A(row0 + 0, col) = F.a.real();
    A(row0 + 1, col) = F.d.real();
    A(row0 + 2, col) = F.b.real();
    A(row0 + 3, col) = F.b.imag();
  }
}

// Unit eigenvector candidates of a single matrix, empty when M is scalar.
std::vector<std::array<cplx, 2>> eigenvector_candidates(const Mat2& M) {
  std::vector<std::array<cplx, 2>> out;
  const cplx tr = trace(M);
  const cplx disc = std::sqrt(tr * tr - 4.0 * det(M));
  for (int sign : {+1, -1}) {
    const cplx mu = 0.5 * (tr + double(sign) * disc);
    // Null vector of M - mu: rows (a - mu, b) and (c, d - mu).
    const std::array<cplx, 2> v1{M.b, mu - M.a};
    const std::array<cplx, 2> v2{mu - M.d, M.c};
    const double n1 = std::abs(v1[0]) + std::abs(v1[1]);
    const double n2 = std::abs(v2[0]) + std::abs(v2[1]);
    std::array<cplx, 2> v = (n1 >= n2) ? v1 : v2;
    const double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    if (n < 1e-14 * (1.0 + fnorm(M))) continue;  // scalar matrix, no info
    v[0] /= n;
    v[1] /= n;
    out.push_back(v);
  }
  return out;
}

bool has_common_eigenvector(const std::vector<Mat2>& mats) {
  for (const Mat2& seed : mats) {
    for (const auto& v : eigenvector_candidates(seed)) {
      double worst = 0.0;
      for (const Mat2& M : mats) {
        const cplx w0 = M.a * v[0] + M.b * v[1];
        const cplx w1 = M.c * v[0] + M.d * v[1];
        const double wn = std::sqrt(std::norm(w0) + std::norm(w1));
        if (wn < 1e-300) return true;  // v annihilated, trivially invariant line
        const double cross = std::abs(w0 * v[1] - w1 * v[0]) / wn;
        worst = std::max(worst, cross);
      }
      if (worst <= 1e-8) return true;
    }
  }
  return false;
}

}  // namespace

const char* to_string(HolonomyClass c) {
  switch (c) {
    case HolonomyClass::SL2R: return "SL2R";
    case HolonomyClass::SU2: return "SU2";
    case HolonomyClass::REDUCIBLE: return "REDUCIBLE";
    case HolonomyClass::NONE: return "NONE";
  }
  return "NONE";
}

HolonomyForm invariant_hermitian_form(const std::vector<Mat2>& matrices, double rel_tol) {
  if (matrices.empty()) fail_invalid("invariant_hermitian_form: no matrices");
  if (!(rel_tol > 0.0)) fail_invalid("invariant_hermitian_form: rel_tol must be positive");

  HolonomyForm out;
  Eigen::MatrixXd A(4 * static_cast<int>(matrices.size()), 4);
  for (std::size_t r = 0; r < matrices.size(); ++r) {
    append_rows(A, 4 * static_cast<int>(r), matrices[r]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Trailing singular values of the tall system are padded with zeros when
  // fewer than 4 exist (cannot happen here: A has >= 4 rows).
  for (int i = 0; i < 4; ++i) out.svals[i] = sv[i];

  const double smax = sv[0];
  int nullity = 0;
  if (smax <= 1e-14) {
    nullity = 4;  // every generator is the identity
  } else {
    for (int i = 0; i < 4; ++i) {
      if (sv[i] <= rel_tol * smax) ++nullity;
    }
  }
  out.nullity = nullity;

  if (has_common_eigenvector(matrices)) {
    out.cls = HolonomyClass::REDUCIBLE;
    return out;
  }
  if (nullity == 0) {
    out.cls = HolonomyClass::NONE;
    return out;
  }
  if (nullity >= 2) {
    out.cls = HolonomyClass::REDUCIBLE;
    return out;
  }

  Eigen::Vector4d x = svd.matrixV().col(3);
  Mat2 H = hermitian_from_coeffs(x);
  const double n = fnorm(H);
  H = (1.0 / n) * H;
  const double h11 = H.a.real();
  const double h22 = H.d.real();
  const double det = h11 * h22 - std::norm(H.b);
  if (std::abs(det) <= 1e-8) {
    out.cls = HolonomyClass::REDUCIBLE;  // null invariant form, invariant line
    out.H = H;
    return out;
  }
  if (det < 0.0) {
    out.cls = HolonomyClass::SL2R;
    out.H = H;
    return out;
  }
  // Definite form: orient it positive.
  if (h11 + h22 < 0.0) H = (-1.0) * H;
  out.cls = HolonomyClass::SU2;
  out.H = H;
  return out;
}

HolonomyForm invariant_hermitian_form(const MonodromyRep& rep, double rel_tol) {
  return invariant_hermitian_form(rep.matrices, rel_tol);
}

double form_residual(const Mat2& M, const Mat2& C) {
  return fnorm(dagger(M) * C * M - C);
}

Mat2 sl2r_realiser(const Mat2& H_in) {
  // Symmetrize defensively; inputs are Hermitian up to roundoff.
  Mat2 H = H_in;
  H.a = H.a.real();
  H.d = H.d.real();
  H.b = 0.5 * (H_in.b + std::conj(H_in.c));
  H.c = std::conj(H.b);

  const double h11 = H.a.real();
  const double h22 = H.d.real();
  const double det = h11 * h22 - std::norm(H.b);
  const double scale = fnorm(H);
  if (!(det < -1e-12 * scale * scale)) {
    fail_invalid("sl2r_realiser: form must have signature (1,1)");
  }
  const double tr = h11 + h22;
  const double disc = std::sqrt(tr * tr - 4.0 * det);
  const double lam1 = 0.5 * (tr + disc);  // > 0
  const double lam2 = 0.5 * (tr - disc);  // < 0

  // Unit eigenvector for lam1, picked from the numerically larger residual row.
  cplx v0, v1;
  {
    const cplx a1 = H.b, b1 = cplx(lam1 - h11);
    const cplx a2 = cplx(lam1 - h22), b2 = std::conj(H.b);
    if (std::abs(a1) + std::abs(b1) >= std::abs(a2) + std::abs(b2)) {
      v0 = a1;
      v1 = b1;
    } else {
      v0 = a2;
      v1 = b2;
    }
    double n = std::sqrt(std::norm(v0) + std::norm(v1));
    if (n < 1e-14 * (1.0 + scale)) {  // H is already diagonal
      if (h11 > 0.0) {
        v0 = 1.0;
        v1 = 0.0;
      } else {
        v0 = 0.0;
        v1 = 1.0;
      }
      n = 1.0;
    }
    v0 /= n;
    v1 /= n;
    // Fix the phase: largest component real positive.
    const cplx lead = (std::abs(v0) >= std::abs(v1)) ? v0 : v1;
    const cplx phase = lead / std::abs(lead);
    v0 /= phase;
    v1 /= phase;
  }

  // U = [v, v_perp] unitary, H = U diag(lam1, lam2) U^dagger.
  Mat2 Udag;
  Udag.a = std::conj(v0);
  Udag.b = std::conj(v1);
  Udag.c = -v1;
  Udag.d = v0;

  Mat2 P;
  P.a = std::sqrt(lam1);
  P.b = 0;
  P.c = 0;
  P.d = std::sqrt(-lam2);
  P = P * Udag;  // now H = P^dagger diag(1,-1) P

  // Cayley transform mapping SU(1,1) to SL(2,R).
  Mat2 Tinv;
  const double s = 1.0 / std::sqrt(2.0);
  Tinv.a = s;
  Tinv.b = cplx(0, -s);
  Tinv.c = cplx(0, -s);
  Tinv.d = s;
  return Tinv * P;
}

double single_valuedness_residual(const Oper& oper, const PathSpec& loop, const Mat2& C,
                                  const TransportOptions& opts) {
  if (!loop.closed) fail_invalid("single_valuedness_residual: loop must be closed");
  const Mat2 M = transport(oper, loop, opts);
  return form_residual(M, C);
}

std::vector<cplx> sov_momenta(const std::vector<cplx>& z, cplx u0,
                              const std::vector<cplx>& u) {
  if (z.size() < 2) fail_invalid("sov_momenta: need at least two positions");
  std::vector<cplx> p(z.size());
  for (std::size_t r = 0; r < z.size(); ++r) {
    cplx num = u0;
    for (const cplx& uk : u) num *= (z[r] - uk);
    cplx den = 1.0;
    for (std::size_t s = 0; s < z.size(); ++s) {
      if (s == r) continue;
      const cplx d = z[r] - z[s];
      if (std::abs(d) == 0.0) fail_invalid("sov_momenta: coincident positions");
      den *= d;
    }
    p[r] = num / den;
  }
  return p;
}

cplx sov_kernel(const std::vector<cplx>& x, const std::vector<cplx>& u,
                const std::vector<cplx>& z, const std::vector<cplx>& j, cplx J) {
  const std::size_t n = z.size();
  if (n < 1 || x.size() != n || j.size() != n) {
    fail_invalid("sov_kernel: x, z, j must have equal nonzero length");
  }
  struct Factor {
    double log_base;  // log of the magnitude, -inf encoded by zero flag
    bool zero;
    cplx w;           // exponent
    std::string name;
  };
  std::vector<Factor> factors;

  // log |prod_{s != r} (z_r - z_s)| reused by two factors.
  std::vector<double> log_vand(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      if (s == r) continue;
      const double d = std::abs(z[r] - z[s]);
      if (d == 0.0) fail_invalid("sov_kernel: coincident positions");
      log_vand[r] += std::log(d);
    }
  }
  std::vector<double> log_umon(n, 0.0);  // log |prod_k (z_r - u_k)|
  std::vector<char> umon_zero(n, 0);     // some u_k sits exactly on z_r
  for (std::size_t r = 0; r < n; ++r) {
    for (const cplx& uk : u) {
      const double d = std::abs(z[r] - uk);
      if (d == 0.0) {
        umon_zero[r] = 1;
      } else {
        log_umon[r] += std::log(d);
      }
    }
  }

  {
    cplx A = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      cplx num = 1.0;
      for (const cplx& uk : u) num *= (z[r] - uk);
      cplx den = 1.0;
      for (std::size_t s = 0; s < n; ++s) {
        if (s != r) den *= (z[r] - z[s]);
      }
      A += x[r] * num / den;
    }
    const double m = std::abs(A);
    factors.push_back({m > 0.0 ? std::log(m) : 0.0, m == 0.0, 2.0 * J, "momentum sum"});
  }
  for (std::size_t r = 0; r < n; ++r) {
    const cplx w = 2.0 * (j[r] + 1.0);
    const std::string name = "position factor " + std::to_string(r);
    if (umon_zero[r]) {
      // z_r - u_k = 0 sits in the denominator, so hand the accumulation the
      // reciprocal base (zero) with the negated exponent.
      factors.push_back({0.0, true, -w, name});
    } else {
      factors.push_back({log_vand[r] - log_umon[r], false, w, name});
    }
  }
  for (std::size_t k = 0; k < u.size(); ++k) {
    for (std::size_t l = k + 1; l < u.size(); ++l) {
      const double m = std::abs(u[k] - u[l]);
      factors.push_back({m > 0.0 ? std::log(m) : 0.0, m == 0.0, 2.0,
                         "separation " + std::to_string(k) + "," + std::to_string(l)});
    }
  }

  bool vanishes = false;
  cplx acc = 0.0;
  for (const Factor& f : factors) {
    if (f.w == 0.0) continue;
    if (f.zero) {
      if (f.w.real() > 0.0) {
        vanishes = true;
        continue;
      }
      fail_numerical("sov_kernel: singular factor (" + f.name + ")");
    }
    acc += f.w * f.log_base;
  }
  if (vanishes) return 0.0;
  return std::exp(acc);
}

}  // namespace oq
