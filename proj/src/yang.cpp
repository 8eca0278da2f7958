#include "operquant/yang.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>

#include "operquant/special.hpp"

namespace oq {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

cplx upsilon_integrand(cplx u) { return log_gamma(u) - log_gamma(1.0 - u); }

double dist_point_segment(cplx p, cplx a, cplx b) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  const double s = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + s * ab));
}

// Straight path is acceptable when its interior stays clear of every integer
// (the log singularities of the integrand). The endpoints themselves may sit
// on integers; the quadrature handles integrable endpoint behaviour.
bool straight_path_ok(cplx x, double clearance) {
  const cplx a(0.5, 0.0);
  const long lo = std::lround(std::floor(std::min(0.5, x.real()))) - 1;
  const long hi = std::lround(std::ceil(std::max(0.5, x.real()))) + 1;
  for (long k = lo; k <= hi; ++k) {
    const cplx kk(double(k), 0.0);
    if (std::abs(kk - x) < 1e-14) continue;  // endpoint singularity is fine
    if (dist_point_segment(kk, a, x) < clearance) return false;
  }
  return true;
}

}  // namespace

cplx upsilon_cl(cplx x, const UpsilonOptions& opts) {
  const cplx half(0.5, 0.0);
  if (std::abs(x - half) == 0.0) return 0.0;
  if (!(opts.deform > 0.0) || !(opts.pole_clearance > 0.0) || !(opts.tol > 0.0)) {
    fail_invalid("upsilon_cl: bad options");
  }

  std::vector<cplx> nodes;
  if (straight_path_ok(x, opts.pole_clearance)) {
    nodes = {half, x};
  } else {
    const double side = (x.imag() >= 0.0) ? 1.0 : -1.0;  // real x detours upward
    const cplx h(0.0, side * opts.deform);
    nodes = {half, half + h, x + h, x};
  }

  const QuadOptions qopts{opts.tol, 12};
  cplx total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    total += integrate_segment(upsilon_integrand, nodes[i], nodes[i + 1], qopts);
  }
  return total;
}

cplx pants_N(const PantsLengths& l, const UpsilonOptions& opts) {
  const cplx c4 = cplx(0.0, 1.0) / (4.0 * kPi);
  const cplx c2 = cplx(0.0, 1.0) / (2.0 * kPi);
  cplx acc = 0.0;
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) {
      acc += upsilon_cl(0.5 + c4 * (s1 * l.l1 + s2 * l.l2 + l.l3), opts);
    }
  }
  cplx out = 0.5 * acc;
  for (const cplx& li : {l.l1, l.l2, l.l3}) {
    out -= 0.5 * upsilon_cl(1.0 + c2 * li, opts).real();
  }
  return out;
}

namespace {

struct WSample {
  cplx lambda;  // achieved cutting-curve length (tracked branch)
  cplx kappa;
  cplx E_free;
  cplx E_moving;
};

using SampleMap = std::map<long, WSample>;  // key: dyadic position index

constexpr int kMaxDepth = 20;  // dyadic key resolution, 2^kMaxDepth per segment

WSample solve_sample(const WFamily& fam, cplx lambda, cplx q, const WSample* seed_from,
                     cplx default_seed, const SolveOptions& sopts) {
  OperConfig cfg = fam.base;
  cfg.punctures[fam.moving_index].z = q;

  FnTracker trk;
  cplx seed = default_seed;
  if (seed_from != nullptr) {
    trk.has_prev = true;
    trk.lambda_prev = seed_from->lambda;
    trk.kappa_prev = seed_from->kappa;
    seed = seed_from->E_free;
  }
  const InverseFrame inv = E_of_lambda(cfg, lambda, seed, &trk, sopts);
  WSample s;
  s.lambda = inv.fn.lambda;
  s.kappa = inv.fn.kappa;
  s.E_free = inv.free_value;
  s.E_moving = inv.accessory.values[fam.moving_index];
  return s;
}

const WSample* nearest_sample(const SampleMap& m, long key) {
  if (m.empty()) return nullptr;
  auto hi = m.lower_bound(key);
  if (hi == m.end()) return &std::prev(hi)->second;
  if (hi->first == key) return &hi->second;
  if (hi == m.begin()) return &hi->second;
  auto lo = std::prev(hi);
  return (key - lo->first <= hi->first - key) ? &lo->second : &hi->second;
}

}  // namespace

WPathSample w_increment(const WFamily& family, const std::vector<WPathPoint>& waypoints,
                        cplx free_seed, const SolveOptions& solve_opts, double quad_tol) {
  const OperConfig base = validate_config(family.base);
  if (base.size() != 4) fail_invalid("w_increment: needs a four-puncture family");
  if (family.moving_index >= base.size()) fail_invalid("w_increment: bad moving index");
  if (waypoints.size() < 2) fail_invalid("w_increment: need at least two waypoints");
  if (!(quad_tol > 0.0)) fail_invalid("w_increment: quad_tol must be positive");

  const std::size_t nseg = waypoints.size() - 1;
  std::vector<SampleMap> cache(nseg);
  const WSample* prev_segment_end = nullptr;

  // Sample at dyadic position s = key / 2^kMaxDepth within segment seg,
  // seeding branch continuity from the nearest solved neighbour.
  const auto sample_at = [&](std::size_t seg, long key) -> const WSample& {
    SampleMap& m = cache[seg];
    auto it = m.find(key);
    if (it != m.end()) return it->second;
    const WSample* seed = nearest_sample(m, key);
    if (seed == nullptr && seg > 0) seed = prev_segment_end;
    const double s = double(key) / double(1L << kMaxDepth);
    const WPathPoint& A = waypoints[seg];
    const WPathPoint& B = waypoints[seg + 1];
    const cplx lam = A.lambda + s * (B.lambda - A.lambda);
    const cplx q = A.q + s * (B.q - A.q);
    WSample out = solve_sample(family, lam, q, seed, free_seed, solve_opts);
    return m.emplace(key, out).first->second;
  };

  cplx total = 0.0;
  int levels_used = 0;
  for (std::size_t seg = 0; seg < nseg; ++seg) {
    const WPathPoint& A = waypoints[seg];
    const WPathPoint& B = waypoints[seg + 1];
    const cplx dlam = B.lambda - A.lambda;
    const cplx dq = B.q - A.q;
    const auto integrand = [&](const WSample& s) {
      return s.E_moving * dq + (cplx(0.0, 1.0) / (4.0 * kPi)) * s.kappa * dlam;
    };
    if (std::abs(dlam) == 0.0 && std::abs(dq) == 0.0) {
      // Constant path segment contributes nothing; still pin its endpoint
      // so the next segment seeds from here.
      prev_segment_end = &sample_at(seg, 1L << kMaxDepth);
      continue;
    }

    // Initial resolution keeps per-interval branch motion small.
    int n0 = 2;
    n0 = std::max<int>(n0, static_cast<int>(std::ceil(std::abs(dlam) / 0.5)));
    n0 = std::max<int>(n0, static_cast<int>(std::ceil(std::abs(dq) / 0.1)));
    int level0 = 1;
    while ((1 << level0) < n0) ++level0;

    cplx prev_T = 0.0;
    bool have_prev = false;
    cplx seg_value = 0.0;
    for (int level = level0;; ++level) {
      if (level > 12 || level > kMaxDepth) {
        fail_numerical("w_increment: quadrature did not converge on segment " +
                       std::to_string(seg));
      }
      const long n = 1L << level;
      const long stride = 1L << (kMaxDepth - level);
      // Evaluate in path order so fresh samples always have a solved
      // neighbour within one interval.
      cplx T = 0.0;
      for (long k = 0; k <= n; ++k) {
        const WSample& s = sample_at(seg, k * stride);
        const double w = (k == 0 || k == n) ? 0.5 : 1.0;
        T += w * integrand(s);
      }
      T /= double(n);
      if (have_prev) {
        const double diff = std::abs(T - prev_T);
        if (diff <= quad_tol) {
          seg_value = T + (T - prev_T) / 3.0;  // Richardson / Simpson limit
          levels_used = std::max(levels_used, level);
          break;
        }
      }
      prev_T = T;
      have_prev = true;
    }
    total += seg_value;
    prev_segment_end = &sample_at(seg, 1L << kMaxDepth);
  }

  WPathSample out;
  out.increment = total;
  out.increment_scaled = 4.0 * kPi * cplx(0.0, 1.0) * total;
  out.levels = levels_used;
  for (std::size_t seg = 0; seg < nseg; ++seg) {
    const WPathPoint& A = waypoints[seg];
    const WPathPoint& B = waypoints[seg + 1];
    for (const auto& [key, s] : cache[seg]) {
      if (seg > 0 && key == 0) continue;  // shared with previous segment end
      const double t = double(key) / double(1L << kMaxDepth);
      out.path.push_back({A.lambda + t * (B.lambda - A.lambda), A.q + t * (B.q - A.q)});
      out.kappa.push_back(s.kappa);
      out.E.push_back(s.E_moving);
    }
  }
  return out;
}

cplx w_nodal_asymptotics(cplx l, cplx l1, cplx l2, const std::vector<PantsLengths>& pants,
                         cplx q, const std::function<cplx(cplx)>& delta,
                         const UpsilonOptions& opts) {
  if (!delta) fail_invalid("w_nodal_asymptotics: delta function required");
  if (std::abs(q) == 0.0) fail_invalid("w_nodal_asymptotics: q must be nonzero");
  cplx out = (delta(l) - delta(l1) - delta(l2)) * std::log(q);
  for (const PantsLengths& p : pants) out += pants_N(p, opts);
  return out;
}

}  // namespace oq
