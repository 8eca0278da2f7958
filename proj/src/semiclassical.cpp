#include "operquant/semiclassical.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace oq {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// 15-point Gauss-Legendre rule on [-1, 1], nodes ascending.
constexpr int kGLn = 15;
constexpr double kGLx[kGLn] = {
    -0.9879925180204854, -0.9372733924007059, -0.8482065834104272,
    -0.7244177313601700, -0.5709721726085388, -0.3941513470775634,
    -0.2011940939974345, 0.0,                 0.2011940939974345,
    0.3941513470775634,  0.5709721726085388,  0.7244177313601700,
    0.8482065834104272,  0.9372733924007059,  0.9879925180204854};
constexpr double kGLw[kGLn] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719,
    0.1395706779261543, 0.1662692058169939, 0.1861610000155622,
    0.1984314853271116, 0.2025782419255613, 0.1984314853271116,
    0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

using Poly = std::vector<cplx>;  // ascending powers

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly c(a.size() + b.size() - 1, cplx(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

void poly_axpy(Poly& acc, cplx s, const Poly& p) {
  if (acc.size() < p.size()) acc.resize(p.size(), cplx(0));
  for (std::size_t i = 0; i < p.size(); ++i) acc[i] += s * p[i];
}

cplx poly_eval(const Poly& p, cplx u) {
  cplx v = 0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * u + p[i];
  return v;
}

Poly poly_derivative(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(double(i) * p[i]);
  return d;
}

// Divides p by (u - a); remainder discarded (caller checks p(a) ~ 0 first).
Poly poly_deflate(const Poly& p, cplx a) {
  if (p.size() <= 1) return {};
  Poly q(p.size() - 1);
  cplx carry = p.back();
  for (std::size_t i = p.size() - 1; i-- > 0;) {
    q[i] = carry;
    carry = p[i] + carry * a;
  }
  return q;
}

// Numerator of t_cl over prod (u - z_r)^2.
Poly numerator_poly(const SpectralCurveData& c) {
  Poly den{cplx(1)};
  for (const cplx& zr : c.z) den = poly_mul(den, poly_mul({-zr, 1}, {-zr, 1}));
  Poly N = poly_mul(c.poly, den);
  if (N.empty()) N = {cplx(0)};
  for (std::size_t r = 0; r < c.z.size(); ++r) {
    Poly q{cplx(1)};
    for (std::size_t s = 0; s < c.z.size(); ++s) {
      if (s == r) continue;
      q = poly_mul(q, poly_mul({-c.z[s], 1}, {-c.z[s], 1}));
    }
    poly_axpy(N, c.lsq[r], q);
    poly_axpy(N, c.H[r], poly_mul({-c.z[r], 1}, q));
  }
  return N;
}

void validate_curve(const SpectralCurveData& c) {
  if (c.lsq.size() != c.z.size() || c.H.size() != c.z.size()) {
    fail_invalid("spectral curve: z, lsq, H must have equal length");
  }
  for (std::size_t i = 0; i < c.z.size(); ++i) {
    for (std::size_t k = i + 1; k < c.z.size(); ++k) {
      if (std::abs(c.z[i] - c.z[k]) == 0.0) fail_invalid("spectral curve: coincident poles");
    }
  }
}

double curve_scale(const SpectralCurveData& c, const std::vector<cplx>& extra) {
  double s = 1.0;
  for (const cplx& z : c.z) s = std::max(s, std::abs(z));
  for (const cplx& z : extra) s = std::max(s, std::abs(z));
  return s;
}

std::vector<cplx> curve_roots(const SpectralCurveData& c, bool certify_simple) {
  Poly N = numerator_poly(c);
  double maxc = 0.0;
  for (const cplx& v : N) maxc = std::max(maxc, std::abs(v));
  if (maxc == 0.0) fail_invalid("branch_points: t is identically zero");
  while (N.size() > 1 && std::abs(N.back()) <= 1e-12 * maxc) N.pop_back();

  // Roots of N at pole sites are artefacts of clearing denominators (the
  // corresponding t has a lower-order pole there, not a zero); remove them.
  for (const cplx& zr : c.z) {
    for (int guard = 0; guard < 3 && N.size() > 1; ++guard) {
      double scale = 0.0;
      double pw = 1.0;
      for (const cplx& v : N) {
        scale += std::abs(v) * pw;
        pw *= std::max(1.0, std::abs(zr));
      }
      if (std::abs(poly_eval(N, zr)) > 1e-10 * scale) break;
      N = poly_deflate(N, zr);
    }
  }
  if (N.size() <= 1) return {};

  const int deg = static_cast<int>(N.size()) - 1;
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -N[i] / N[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  if (es.info() != Eigen::Success) fail_numerical("branch_points: eigen solver failed");

  std::vector<cplx> roots(deg);
  const Poly Nd = poly_derivative(N);
  for (int i = 0; i < deg; ++i) {
    cplx r = es.eigenvalues()[i];
    double fr = std::abs(poly_eval(N, r));
    for (int it = 0; it < 3; ++it) {  // Newton polish, descent-guarded so a
      const cplx d = poly_eval(Nd, r);  // near-multiple root cannot send it off
      if (std::abs(d) < 1e-300) break;
      const cplx cand = r - poly_eval(N, r) / d;
      const double fc = std::abs(poly_eval(N, cand));
      if (fc >= fr) break;
      r = cand;
      fr = fc;
    }
    roots[i] = r;
  }
  std::sort(roots.begin(), roots.end(), [](const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });

  if (certify_simple) {
    const double scale = curve_scale(c, roots);
    for (std::size_t i = 0; i < roots.size(); ++i) {
      for (std::size_t k = i + 1; k < roots.size(); ++k) {
        if (std::abs(roots[i] - roots[k]) < 1e-7 * scale) {
          fail_numerical("branch_points: multiple root, degenerate curve");
        }
      }
    }
  }
  return roots;
}

// Square root continued by proximity to the previous value; flags when the
// rotation per step is too large to disambiguate.
struct BranchStep {
  cplx v;
  bool ok;
};

BranchStep continue_branch(cplx t, cplx v_prev) {
  cplx w = std::sqrt(t);
  if (std::abs(w + v_prev) < std::abs(w - v_prev)) w = -w;
  const double gap = std::abs(w - v_prev);
  const double size = std::abs(w) + std::abs(v_prev);
  return {w, gap <= 0.5 * size + 1e-300};
}

struct SegResult {
  cplx integral;
  cplx v_end;
  bool ok;
};

SegResult gl15_segment(const SpectralCurveData& c, cplx A, cplx B, cplx v_in) {
  const cplx half = 0.5 * (B - A);
  const cplx mid = 0.5 * (A + B);
  cplx acc = 0;
  cplx v_prev = v_in;
  bool ok = true;
  for (int i = 0; i < kGLn; ++i) {
    const cplx u = mid + half * kGLx[i];
    const BranchStep bs = continue_branch(eval_classical_t(c, u), v_prev);
    ok = ok && bs.ok;
    v_prev = bs.v;
    acc += kGLw[i] * bs.v;
  }
  const BranchStep end = continue_branch(eval_classical_t(c, B), v_prev);
  return {acc * half, end.v, ok && end.ok};
}

struct SegOut {
  cplx integral;
  cplx v_end;
};

SegOut integrate_segment_adaptive(const SpectralCurveData& c, cplx A, cplx B, cplx v_in,
                                  double tol, int depth) {
  if (depth > 40) fail_numerical("period: branch-tracking failure (refinement exhausted)");
  const SegResult whole = gl15_segment(c, A, B, v_in);
  const cplx M = 0.5 * (A + B);
  const SegResult left = gl15_segment(c, A, M, v_in);
  const SegResult right = gl15_segment(c, M, B, left.v_end);
  if (whole.ok && left.ok && right.ok &&
      std::abs(whole.integral - (left.integral + right.integral)) <= tol) {
    return {left.integral + right.integral, right.v_end};
  }
  const SegOut l = integrate_segment_adaptive(c, A, M, v_in, 0.5 * tol, depth + 1);
  const SegOut r = integrate_segment_adaptive(c, M, B, l.v_end, 0.5 * tol, depth + 1);
  return {l.integral + r.integral, r.v_end};
}

double point_segment_dist(cplx p, cplx a, cplx b) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  double s = ((p - a) * std::conj(ab)).real() / len2;
  s = std::clamp(s, 0.0, 1.0);
  return std::abs(p - (a + s * ab));
}

}  // namespace

cplx eval_classical_t(const SpectralCurveData& curve, cplx u) {
  cplx t = poly_eval(curve.poly, u);
  for (std::size_t r = 0; r < curve.z.size(); ++r) {
    const cplx d = u - curve.z[r];
    if (std::abs(d) == 0.0) fail_invalid("eval_classical_t: evaluation at a pole");
    t += curve.lsq[r] / (d * d) + curve.H[r] / d;
  }
  return t;
}

std::vector<cplx> branch_points(const SpectralCurveData& curve) {
  validate_curve(curve);
  return curve_roots(curve, true);
}

RealActionPair real_actions(const PeriodPair& pp) {
  return {pp.a.real(), pp.aD.real()};
}

cplx period(const SpectralCurveData& curve, const PathSpec& cycle, double tol) {
  validate_curve(curve);
  if (!cycle.closed) fail_invalid("period: cycle must be closed");
  if (cycle.vertices.size() < 3) fail_invalid("period: cycle needs at least three vertices");
  if (!(tol > 0.0)) fail_invalid("period: tol must be positive");

  std::vector<cplx> avoid = curve.z;
  bool have_roots = true;
  std::vector<cplx> roots;
  try {
    roots = curve_roots(curve, false);
  } catch (const Error&) {
    have_roots = false;  // e.g. t constant with no zeros to avoid
  }
  if (have_roots) avoid.insert(avoid.end(), roots.begin(), roots.end());

  const double clearance = 1e-3 * curve_scale(curve, avoid);
  double perimeter = 0.0;
  const std::size_t nseg = cycle.vertices.size();
  for (std::size_t i = 0; i < nseg; ++i) {
    const cplx a = cycle.vertices[i];
    const cplx b = cycle.vertices[(i + 1) % nseg];
    perimeter += std::abs(b - a);
    for (const cplx& p : avoid) {
      if (point_segment_dist(p, a, b) < clearance) {
        fail_invalid("period: cycle passes within clearance of a pole or branch point");
      }
    }
  }
  if (perimeter == 0.0) fail_invalid("period: degenerate cycle");

  const cplx v0 = std::sqrt(eval_classical_t(curve, cycle.vertices[0]));
  cplx v = v0;
  cplx total = 0;
  for (std::size_t i = 0; i < nseg; ++i) {
    const cplx a = cycle.vertices[i];
    const cplx b = cycle.vertices[(i + 1) % nseg];
    const double seg_tol = 0.5 * tol * std::max(std::abs(b - a) / perimeter, 1e-3);
    const SegOut out = integrate_segment_adaptive(curve, a, b, v, seg_tol, 0);
    total += out.integral;
    v = out.v_end;
  }
  if (std::abs(v - v0) > 0.3 * (std::abs(v0) + 1e-300)) {
    fail_numerical(
        "period: branch does not close around this cycle (odd number of enclosed branch "
        "points?)");
  }
  return total;
}

std::array<double, 2> bs_residual(const PeriodPair& pp, double eps1, long n, long m) {
  return {pp.a.real() - eps1 * kPi * double(n), pp.aD.real() - eps1 * kPi * double(m)};
}

WkbTable wkb_trace_check(const SpectralCurveData& classical, const std::vector<cplx>& l,
                         const std::vector<double>& eps_list, const PathSpec& cycle,
                         std::size_t i, std::size_t j, const TransportOptions& opts) {
  validate_curve(classical);
  if (l.size() != classical.z.size()) {
    fail_invalid("wkb_trace_check: one classical length per pole required");
  }
  for (std::size_t r = 0; r < l.size(); ++r) {
    if (std::abs(l[r] * l[r] - classical.lsq[r]) >
        1e-10 * (1.0 + std::abs(classical.lsq[r]))) {
      fail_invalid("wkb_trace_check: l and lsq disagree at position " + std::to_string(r));
    }
  }
  if (eps_list.empty()) fail_invalid("wkb_trace_check: eps list must not be empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) fail_invalid("wkb_trace_check: eps values must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) {
      fail_invalid("wkb_trace_check: eps list must be strictly decreasing");
    }
  }

  WkbTable table;
  table.a = period(classical, cycle);
  const double ascale = std::abs(table.a);
  if (ascale <= 1e-12) {
    table.warning = "degenerate cycle period a = 0, check skipped";
    return table;
  }

  for (double eps : eps_list) {
    OperConfig cfg;
    cfg.epsilon1 = eps;
    for (std::size_t r = 0; r < classical.z.size(); ++r) {
      Puncture p;
      p.z = classical.z[r];
      p.delta = classical.lsq[r] - eps * l[r];
      cfg.punctures.push_back(p);
    }
    AccessoryVector acc;
    acc.values = classical.H;
    const Oper oper = build_oper(cfg, acc);
    const PathSpec loop = pair_loop(cfg, i, j);
    const Mat2 M = transport(oper, loop, opts);
    const cplx tr = trace(M);
    const cplx target = cplx(0, 1) * table.a / eps;
    const cplx lg = std::log(tr);
    const double k0 = std::round((target.imag() - lg.imag()) / (2.0 * kPi));
    WkbRow row;
    row.eps = eps;
    row.trace = tr;
    row.err = std::numeric_limits<double>::infinity();
    for (double dk : {-1.0, 0.0, 1.0}) {
      const cplx cand = lg + cplx(0, 2.0 * kPi * (k0 + dk));
      const double e = std::abs(eps * cand - cplx(0, 1) * table.a);
      if (e < row.err) {
        row.err = e;
        row.log_branch = cand;
      }
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace oq
