#include "operquant/quantiser.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace oq {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double sup_norm(const std::array<double, 2>& v) {
  return std::max(std::abs(v[0]), std::abs(v[1]));
}

double trace_imag_extent(const TraceCoordinates& tc) {
  double m = 0.0;
  for (const cplx& v : tc.L) m = std::max(m, std::abs(v.imag()));
  m = std::max({m, std::abs(tc.Ls.imag()), std::abs(tc.Lt.imag()), std::abs(tc.Lu.imag())});
  return m;
}

}  // namespace

AccessoryVector reduce_accessory(const OperConfig& config,
                                 const std::vector<cplx>& free_values) {
  const OperConfig cfg = validate_config(config);
  const std::size_t n = cfg.size();
  if (free_values.size() + 3 != n) {
    fail_invalid("reduce_accessory: expected " + std::to_string(n - 3) +
                 " free values, got " + std::to_string(free_values.size()));
  }

  // Right-hand side: sums of the fixed part of the three moment constraints.
  cplx r0 = 0, r1 = 0, r2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    r1 -= cfg.punctures[k].delta;
    r2 -= 2.0 * cfg.punctures[k].delta * cfg.punctures[k].z;
  }
  for (std::size_t k = 0; k + 3 < n; ++k) {
    const cplx z = cfg.punctures[k].z;
    r0 -= free_values[k];
    r1 -= free_values[k] * z;
    r2 -= free_values[k] * z * z;
  }

  const cplx za = cfg.punctures[n - 3].z;
  const cplx zb = cfg.punctures[n - 2].z;
  const cplx zc = cfg.punctures[n - 1].z;
  const cplx det = (zb - za) * (zc - za) * (zc - zb);
  if (std::abs(det) < 1e-250) fail_numerical("reduce_accessory: singular moment system");

  // Cramer on rows (1,1,1), (za,zb,zc), (za^2,zb^2,zc^2).
  const auto det3 = [](cplx a0, cplx a1, cplx a2, cplx b0, cplx b1, cplx b2, cplx c0,
                       cplx c1, cplx c2) {
    return a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0);
  };
  const cplx Ea = det3(r0, 1, 1, r1, zb, zc, r2, zb * zb, zc * zc) / det;
  const cplx Eb = det3(1, r0, 1, za, r1, zc, za * za, r2, zc * zc) / det;
  const cplx Ec = det3(1, 1, r0, za, zb, r1, za * za, zb * zb, r2) / det;

  AccessoryVector acc;
  acc.values.assign(free_values.begin(), free_values.end());
  acc.values.push_back(Ea);
  acc.values.push_back(Eb);
  acc.values.push_back(Ec);
  return acc;
}

LambdaFrame lambda_of_E(const OperConfig& config, const std::vector<cplx>& free_values,
                        FnTracker* tracker, const SolveOptions& opts) {
  LambdaFrame frame;
  frame.accessory = reduce_accessory(config, free_values);
  const Oper oper = build_oper(config, frame.accessory);
  frame.rep = monodromy_rep(oper, opts.transport);
  frame.traces = trace_coordinates(frame.rep);
  frame.fn = traces_to_fn(frame.traces, 1, tracker, opts.surface_tol);
  return frame;
}

std::array<double, 2> quantisation_residual(const FNCoords& fn, const QuantLabel& label) {
  return {fn.lambda.real() - 2.0 * kPi * double(label.n),
          fn.kappa.real() - double(label.nu) * kPi * double(label.m)};
}

SpectrumPoint solve_spectrum(const OperConfig& config, const QuantLabel& label,
                             const std::vector<cplx>& initial_free,
                             const SolveOptions& opts) {
  const OperConfig cfg = validate_config(config);
  if (cfg.size() != 4) fail_invalid("solve_spectrum: needs exactly four punctures");
  if (initial_free.size() != 1) fail_invalid("solve_spectrum: needs one free value");
  if (label.nu != 1) fail_invalid("solve_spectrum: four-puncture channel has nu = 1");

  // Seed the branch tracker at the label target so the first evaluation lands
  // in the lattice cell containing the sought root.
  FnTracker tracker;
  tracker.has_prev = true;
  tracker.lambda_prev = cplx(2.0 * kPi * label.n, 0.0);
  tracker.kappa_prev = cplx(kPi * label.nu * label.m, 0.0);

  cplx E = initial_free[0];
  LambdaFrame frame = lambda_of_E(cfg, {E}, &tracker, opts);
  std::array<double, 2> F = quantisation_residual(frame.fn, label);
  int iterations = 0;

  while (sup_norm(F) > opts.tol) {
    if (++iterations > opts.max_iter) {
      fail_numerical("solve_spectrum: no convergence after " +
                     std::to_string(opts.max_iter) + " iterations (residual " +
                     std::to_string(sup_norm(F)) + ")");
    }
    const double h = opts.fd_step * (1.0 + std::abs(E));

    // Forward-difference Jacobian in (Re E, Im E); probes use tracker copies
    // so the main branch state only advances on accepted steps.
    double J[2][2];
    for (int k = 0; k < 2; ++k) {
      const cplx Ek = E + (k == 0 ? cplx(h, 0) : cplx(0, h));
      FnTracker probe = tracker;
      const LambdaFrame pf = lambda_of_E(cfg, {Ek}, &probe, opts);
      const std::array<double, 2> Fp = quantisation_residual(pf.fn, label);
      J[0][k] = (Fp[0] - F[0]) / h;
      J[1][k] = (Fp[1] - F[1]) / h;
    }
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double jscale = std::max({std::abs(J[0][0]), std::abs(J[0][1]),
                                    std::abs(J[1][0]), std::abs(J[1][1]), 1e-30});
    if (std::abs(det) < 1e-14 * jscale * jscale) {
      fail_numerical("solve_spectrum: singular Jacobian");
    }
    const double dx = (-F[0] * J[1][1] + F[1] * J[0][1]) / det;
    const double dy = (-F[1] * J[0][0] + F[0] * J[1][0]) / det;

    bool stepped = false;
    for (double alpha = 1.0; alpha >= 1.0 / 64.0; alpha *= 0.5) {
      const cplx Et = E + alpha * cplx(dx, dy);
      FnTracker trial = tracker;
      LambdaFrame tf = lambda_of_E(cfg, {Et}, &trial, opts);
      const std::array<double, 2> Ft = quantisation_residual(tf.fn, label);
      if (sup_norm(Ft) < sup_norm(F)) {
        E = Et;
        tracker = trial;
        frame = std::move(tf);
        F = Ft;
        stepped = true;
        break;
      }
    }
    if (!stepped) {
      fail_numerical("solve_spectrum: line search stalled at residual " +
                     std::to_string(sup_norm(F)));
    }
  }

  SpectrumPoint pt;
  pt.label = label;
  pt.eigenvalues = {E};
  pt.accessory = frame.accessory;
  pt.fn = frame.fn;
  pt.traces = frame.traces;
  pt.residual = F;
  pt.iterations = iterations;
  pt.trace_reality = trace_imag_extent(frame.traces);

  const HolonomyForm hf = invariant_hermitian_form(frame.rep);
  pt.holonomy = hf.cls;
  pt.hermitian_form = hf.H;
  if (hf.cls == HolonomyClass::SL2R) {
    pt.realiser = sl2r_realiser(hf.H);
    pt.accepted = true;
  } else {
    pt.accepted = false;
    pt.warning = std::string("holonomy class ") + to_string(hf.cls) +
                 ", point not accepted";
  }
  if (pt.trace_reality > opts.trace_reality_tol) {
    if (!pt.warning.empty()) pt.warning += "; ";
    pt.warning += "trace reality defect " + std::to_string(pt.trace_reality);
  }
  return pt;
}

InverseFrame E_of_lambda(const OperConfig& config, cplx lambda_target, cplx free_seed,
                         FnTracker* tracker, const SolveOptions& opts) {
  const OperConfig cfg = validate_config(config);
  if (cfg.size() != 4) fail_invalid("E_of_lambda: needs exactly four punctures");

  FnTracker local;
  FnTracker* trk = tracker ? tracker : &local;
  if (!trk->has_prev) {
    trk->has_prev = true;
    trk->lambda_prev = lambda_target;
    trk->kappa_prev = 0.0;
  }

  cplx E = free_seed;
  LambdaFrame frame = lambda_of_E(cfg, {E}, trk, opts);
  cplx g = frame.fn.lambda - lambda_target;

  for (int iter = 0; std::abs(g) > opts.tol; ++iter) {
    if (iter >= opts.max_iter) {
      fail_numerical("E_of_lambda: no convergence (residual " +
                     std::to_string(std::abs(g)) + ")");
    }
    const double h = opts.fd_step * (1.0 + std::abs(E));
    FnTracker pa = *trk, pb = *trk;
    const cplx lp = lambda_of_E(cfg, {E + h}, &pa, opts).fn.lambda;
    const cplx lm = lambda_of_E(cfg, {E - h}, &pb, opts).fn.lambda;
    const cplx dg = (lp - lm) / (2.0 * h);
    if (std::abs(dg) < 1e-300) fail_numerical("E_of_lambda: stationary map");
    const cplx step = -g / dg;

    bool stepped = false;
    for (double alpha = 1.0; alpha >= 1.0 / 64.0; alpha *= 0.5) {
      const cplx Et = E + alpha * step;
      FnTracker trial = *trk;
      LambdaFrame tf = lambda_of_E(cfg, {Et}, &trial, opts);
      const cplx gt = tf.fn.lambda - lambda_target;
      if (std::abs(gt) < std::abs(g)) {
        E = Et;
        *trk = trial;
        frame = std::move(tf);
        g = gt;
        stepped = true;
        break;
      }
    }
    if (!stepped) {
      fail_numerical("E_of_lambda: line search stalled at residual " +
                     std::to_string(std::abs(g)));
    }
  }

  InverseFrame out;
  out.accessory = frame.accessory;
  out.free_value = E;
  out.fn = frame.fn;
  return out;
}

}  // namespace oq
