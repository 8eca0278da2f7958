#include "operquant/monodromy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace oq {

namespace {

double point_segment_distance(cplx p, cplx a, cplx b) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  double t = ((p - a) * std::conj(ab)).real() / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

double nearest_puncture_distance(const OperConfig& config, cplx u) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : config.punctures) d = std::min(d, std::abs(u - p.z));
  return d;
}

// Dormand-Prince 5(4) pair on the 2x2 fundamental system along one segment.
// State is the fundamental matrix Y with y(end) = Y * y(start).
struct Rhs {
  const Oper& oper;
  cplx z0, dz;  // u(s) = z0 + s dz
  cplx scale;   // dz / eps1

  Mat2 operator()(double s, const Mat2& y) const {
    const cplx t = eval_t(oper, z0 + s * dz);
    // row1' = scale * row2 ; row2' = -scale * t * row1
    return Mat2{scale * y.c, scale * y.d, -scale * t * y.a, -scale * t * y.b};
  }
};

double error_norm(const Mat2& err, const Mat2& y0, const Mat2& y1, double atol, double rtol) {
  auto comp = [&](cplx e, cplx a, cplx b) {
    const double sc = atol + rtol * std::max(std::abs(a), std::abs(b));
    return std::abs(e) / sc;
  };
  double m = comp(err.a, y0.a, y1.a);
  m = std::max(m, comp(err.b, y0.b, y1.b));
  m = std::max(m, comp(err.c, y0.c, y1.c));
  m = std::max(m, comp(err.d, y0.d, y1.d));
  return m;
}

Mat2 integrate_segment(const Oper& oper, cplx z0, cplx z1, const TransportOptions& opts) {
  const Rhs rhs{oper, z0, z1 - z0, (z1 - z0) / oper.config.epsilon1};
  const double seglen = std::abs(z1 - z0);
  if (seglen == 0.0) return Mat2::identity();

  // Dormand-Prince coefficients
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Mat2 y = Mat2::identity();
  double s = 0.0;
  Mat2 k1 = rhs(0.0, y);
  // geometric clamp keeps steps shorter than the distance to the nearest pole
  auto clamp_h = [&](double h) {
    const double dmin = nearest_puncture_distance(oper.config, rhs.z0 + s * rhs.dz);
    return std::min(h, 0.35 * dmin / seglen);
  };
  double h = clamp_h(std::min(0.1, 1.0 - s));
  long steps = 0;
  while (s < 1.0) {
    if (++steps > 2000000) fail_numerical("transport step limit exceeded");
    h = std::min(h, 1.0 - s);
    if (h < 1e-13) fail_numerical("step-size underflow (path too close to a singular point)");

    const Mat2 k2 = rhs(s + c2 * h, y + (h * a21) * k1);
    const Mat2 k3 = rhs(s + c3 * h, y + (h * a31) * k1 + (h * a32) * k2);
    const Mat2 k4 = rhs(s + c4 * h, y + (h * a41) * k1 + (h * a42) * k2 + (h * a43) * k3);
    const Mat2 k5 =
        rhs(s + c5 * h, y + (h * a51) * k1 + (h * a52) * k2 + (h * a53) * k3 + (h * a54) * k4);
    const Mat2 k6 = rhs(s + h, y + (h * a61) * k1 + (h * a62) * k2 + (h * a63) * k3 +
                                    (h * a64) * k4 + (h * a65) * k5);
    const Mat2 ynew =
        y + (h * b1) * k1 + (h * b3) * k3 + (h * b4) * k4 + (h * b5) * k5 + (h * b6) * k6;
    const Mat2 k7 = rhs(s + h, ynew);  // FSAL
    const Mat2 err = (h * e1) * k1 + (h * e3) * k3 + (h * e4) * k4 + (h * e5) * k5 +
                     (h * e6) * k6 + (h * e7) * k7;
    const double en = error_norm(err, y, ynew, opts.abs_tol, opts.rel_tol);
    if (en <= 1.0) {
      s += h;
      y = ynew;
      k1 = k7;
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-16), -0.2), 0.2, 5.0);
    h = clamp_h(h * fac);
  }
  return y;
}

}  // namespace

double effective_clearance(const OperConfig& config, const TransportOptions& opts) {
  if (opts.clearance > 0.0) return opts.clearance;
  return opts.clearance_factor * min_separation(config);
}

void check_clearance(const OperConfig& config, const PathSpec& path, double clearance) {
  if (path.vertices.size() < 2) fail_invalid("path needs at least two vertices");
  if (path.closed && std::abs(path.vertices.front() - path.vertices.back()) != 0.0)
    fail_invalid("closed path must end at its start vertex");
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i)
    for (std::size_t r = 0; r < config.punctures.size(); ++r) {
      const double d = point_segment_distance(config.punctures[r].z, path.vertices[i],
                                              path.vertices[i + 1]);
      if (d < clearance) {
        std::ostringstream os;
        os << "path segment " << i << " violates clearance at puncture " << r << " (distance "
           << d << " < " << clearance << ")";
        fail_invalid(os.str());
      }
    }
}

Mat2 transport(const Oper& oper, const PathSpec& path, const TransportOptions& opts) {
  check_clearance(oper.config, path, effective_clearance(oper.config, opts));
  Mat2 m = Mat2::identity();
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i)
    m = integrate_segment(oper, path.vertices[i], path.vertices[i + 1], opts) * m;
  return m;
}

cplx default_basepoint(const OperConfig& config) {
  cplx centroid = 0.0;
  for (const auto& p : config.punctures) centroid += p.z;
  centroid /= static_cast<double>(config.punctures.size());
  double maxd = 0.0;
  for (std::size_t i = 0; i < config.punctures.size(); ++i)
    for (std::size_t j = i + 1; j < config.punctures.size(); ++j)
      maxd = std::max(maxd, std::abs(config.punctures[i].z - config.punctures[j].z));
  return centroid + cplx(0.0, maxd);
}

PathSpec keyhole_loop(const OperConfig& config, std::size_t r, cplx basepoint) {
  if (r >= config.punctures.size()) fail_invalid("puncture index out of range");
  const cplx z = config.punctures[r].z;
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < config.punctures.size(); ++s)
    if (s != r) nearest = std::min(nearest, std::abs(config.punctures[s].z - z));
  const double rho = 0.1 * nearest;
  const cplx dir = (basepoint - z) / std::abs(basepoint - z);
  const double theta0 = std::arg(dir);

  PathSpec path;
  path.closed = true;
  path.vertices.push_back(basepoint);
  constexpr int K = 16;
  for (int k = 0; k <= K; ++k) {
    const double th = theta0 + 2.0 * std::numbers::pi * k / K;  // counterclockwise
    path.vertices.push_back(z + rho * std::polar(1.0, th));
  }
  path.vertices.push_back(basepoint);
  return path;
}

PathSpec pair_loop(const OperConfig& config, std::size_t i, std::size_t j) {
  if (i >= config.punctures.size() || j >= config.punctures.size() || i == j)
    fail_invalid("invalid puncture pair");
  const cplx c = 0.5 * (config.punctures[i].z + config.punctures[j].z);
  const double rin =
      std::max(std::abs(config.punctures[i].z - c), std::abs(config.punctures[j].z - c));
  double rout = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < config.punctures.size(); ++k)
    if (k != i && k != j) rout = std::min(rout, std::abs(config.punctures[k].z - c));
  if (!(rout > 1.2 * rin)) fail_invalid("no separating circle around the puncture pair");
  const double rho = 0.5 * (rin + rout);

  PathSpec path;
  path.closed = true;
  constexpr int K = 32;
  for (int k = 0; k <= K; ++k)
    path.vertices.push_back(c + rho * std::polar(1.0, 2.0 * std::numbers::pi * k / K));
  path.vertices.back() = path.vertices.front();
  return path;
}

MonodromyRep monodromy_rep(const Oper& oper, const TransportOptions& opts) {
  return monodromy_rep(oper, default_basepoint(oper.config), opts);
}

MonodromyRep monodromy_rep(const Oper& oper, cplx basepoint, const TransportOptions& opts) {
  const std::size_t n = oper.config.punctures.size();
  MonodromyRep rep;
  rep.basepoint = basepoint;
  rep.matrices.assign(n, Mat2::identity());
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || n == 1) {
    for (std::size_t r = 0; r < n; ++r)
      rep.matrices[r] = transport(oper, keyhole_loop(oper.config, r, basepoint), opts);
    return rep;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  for (int t = 0; t < std::min<std::size_t>(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t r = next.fetch_add(1); r < n; r = next.fetch_add(1)) {
        try {
          rep.matrices[r] = transport(oper, keyhole_loop(oper.config, r, basepoint), opts);
        } catch (...) {
          errors[r] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rep;
}

double cyclic_residual(const MonodromyRep& rep) {
  Mat2 prod = Mat2::identity();
  for (const auto& m : rep.matrices) prod = m * prod;  // M_n ... M_1
  return fnorm(prod - Mat2::identity());
}

TraceCoordinates trace_coordinates(const MonodromyRep& rep) {
  const std::size_t n = rep.matrices.size();
  if (n != 3 && n != 4) fail_invalid("trace coordinates defined for 3 or 4 punctures");
  TraceCoordinates tc;
  for (const auto& m : rep.matrices) tc.L.push_back(trace(m));
  if (n == 4) {
    tc.Ls = trace(rep.matrices[0] * rep.matrices[1]);
    tc.Lt = trace(rep.matrices[0] * rep.matrices[2]);
    tc.Lu = trace(rep.matrices[1] * rep.matrices[2]);
    tc.has_pairwise = true;
  }
  return tc;
}

cplx quartic_residual(const TraceCoordinates& tc) {
  if (!tc.has_pairwise || tc.L.size() != 4) fail_invalid("quartic residual needs n=4 traces");
  const cplx L1 = tc.L[0], L2 = tc.L[1], L3 = tc.L[2], L4 = tc.L[3];
  const cplx Ls = tc.Ls, Lt = tc.Lt, Lu = tc.Lu;
  const cplx lhs = L1 * L2 * L3 * L4 + Ls * Lt * Lu + Ls * Ls + Lt * Lt + Lu * Lu + L1 * L1 +
                   L2 * L2 + L3 * L3 + L4 * L4;
  const cplx rhs = (L1 * L2 + L3 * L4) * Ls + (L1 * L3 + L2 * L4) * Lt +
                   (L2 * L3 + L1 * L4) * Lu + 4.0;
  return lhs - rhs;
}

}  // namespace oq
