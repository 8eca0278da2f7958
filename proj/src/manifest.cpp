#include "operquant/manifest.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include "operquant/fenchel_nielsen.hpp"
#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/quantiser.hpp"
#include "operquant/semiclassical.hpp"
#include "operquant/sov.hpp"
#include "operquant/types.hpp"
#include "operquant/yang.hpp"

namespace oq {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = 3.14159265358979323846264338327950288;

// ---------------------------------------------------------------------------
// Canonical JSON output: insertion-ordered objects, 17-significant-digit
// floats via to_chars, complex numbers as [re, im]. Non-finite -> null.

std::string print_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

struct JVal {
  enum class K { Null, Bool, Int, Num, Str, Arr, Obj };
  K k = K::Null;
  bool b = false;
  long long i = 0;
  double d = 0.0;
  std::string s;
  std::vector<JVal> arr;
  std::vector<std::pair<std::string, JVal>> fields;

  static JVal null() { return JVal{}; }
  static JVal of(bool v) {
    JVal j;
    j.k = K::Bool;
    j.b = v;
    return j;
  }
  static JVal of(long long v) {
    JVal j;
    j.k = K::Int;
    j.i = v;
    return j;
  }
  static JVal of(int v) { return of(static_cast<long long>(v)); }
  static JVal of(double v) {
    JVal j;
    j.k = K::Num;
    j.d = v;
    return j;
  }
  static JVal of(const std::string& v) {
    JVal j;
    j.k = K::Str;
    j.s = v;
    return j;
  }
  static JVal of(const char* v) { return of(std::string(v)); }
  static JVal of(cplx v) {
    JVal j;
    j.k = K::Arr;
    j.arr = {of(v.real()), of(v.imag())};
    return j;
  }
  static JVal array() {
    JVal j;
    j.k = K::Arr;
    return j;
  }
  static JVal object() {
    JVal j;
    j.k = K::Obj;
    return j;
  }
  template <typename T>
  static JVal list(const std::vector<T>& vs) {
    JVal j = array();
    for (const T& v : vs) j.arr.push_back(of(v));
    return j;
  }

  JVal& set(const std::string& key, JVal v) {
    fields.emplace_back(key, std::move(v));
    return fields.back().second;
  }
  void push(JVal v) { arr.push_back(std::move(v)); }

  void dump(std::string& out) const {
    switch (k) {
      case K::Null:
        out += "null";
        return;
      case K::Bool:
        out += b ? "true" : "false";
        return;
      case K::Int:
        out += std::to_string(i);
        return;
      case K::Num:
        out += print_double(d);
        return;
      case K::Str:
        dump_string(out, s);
        return;
      case K::Arr: {
        out += '[';
        for (std::size_t n = 0; n < arr.size(); ++n) {
          if (n) out += ',';
          arr[n].dump(out);
        }
        out += ']';
        return;
      }
      case K::Obj: {
        out += '{';
        for (std::size_t n = 0; n < fields.size(); ++n) {
          if (n) out += ',';
          dump_string(out, fields[n].first);
          out += ':';
          fields[n].second.dump(out);
        }
        out += '}';
        return;
      }
    }
  }

  static void dump_string(std::string& out, const std::string& v) {
    out += '"';
    for (unsigned char c : v) {
      switch (c) {
        case '"':
          out += "\\\"";
          break;
        case '\\':
          out += "\\\\";
          break;
        case '\n':
          out += "\\n";
          break;
        case '\r':
          out += "\\r";
          break;
        case '\t':
          out += "\\t";
          break;
        default:
          if (c < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
          } else {
            out += static_cast<char>(c);
          }
      }
    }
    out += '"';
  }

  std::string dump() const {
    std::string out;
    dump(out);
    return out;
  }
};

JVal mat_to_json(const Mat2& m) {
  JVal j = JVal::array();
  j.push(JVal::of(m.a));
  j.push(JVal::of(m.b));
  j.push(JVal::of(m.c));
  j.push(JVal::of(m.d));
  return j;
}

// ---------------------------------------------------------------------------
// Schema helpers.

[[noreturn]] void schema_fail(const std::string& msg) { fail_invalid("manifest: " + msg); }

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    schema_fail(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double get_num(const json& v, const char* what) {
  if (!v.is_number()) schema_fail(std::string(what) + " must be a number");
  return v.get<double>();
}

long get_int(const json& v, const char* what) {
  if (!v.is_number_integer()) schema_fail(std::string(what) + " must be an integer");
  return v.get<long>();
}

cplx get_cplx(const json& v, const char* what) {
  if (v.is_number()) return cplx(v.get<double>(), 0.0);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    schema_fail(std::string(what) + " must be a number or a [re, im] pair");
  }
  return cplx(v[0].get<double>(), v[1].get<double>());
}

std::vector<cplx> get_cplx_list(const json& v, const char* what) {
  if (!v.is_array()) schema_fail(std::string(what) + " must be an array");
  std::vector<cplx> out;
  for (const auto& e : v) out.push_back(get_cplx(e, what));
  return out;
}

OperConfig parse_config(const json& m) {
  OperConfig cfg;
  cfg.epsilon1 = get_cplx(need(m, "epsilon1"), "epsilon1");
  const json& ps = need(m, "punctures");
  if (!ps.is_array() || ps.size() < 3) {
    schema_fail("punctures must be an array of at least three entries");
  }
  for (const auto& p : ps) {
    Puncture pc;
    pc.z = get_cplx(need(p, "z"), "puncture z");
    const bool has_delta = p.is_object() && p.contains("delta");
    const bool has_spin = p.is_object() && p.contains("j");
    if (has_delta == has_spin) {
      schema_fail("each puncture needs exactly one of 'delta' or 'j'");
    }
    if (has_spin) {
      pc.spin = get_cplx(p.at("j"), "puncture j");
    } else {
      pc.delta = get_cplx(p.at("delta"), "puncture delta");
    }
    cfg.punctures.push_back(pc);
  }
  return validate_config(cfg);
}

AccessoryVector parse_accessory(const json& m, const OperConfig& cfg) {
  const bool has_full = m.contains("accessory");
  const bool has_free = m.contains("free");
  if (has_full == has_free) {
    schema_fail("needs exactly one of 'accessory' (length n) or 'free' (length n-3)");
  }
  if (has_full) {
    AccessoryVector acc;
    acc.values = get_cplx_list(m.at("accessory"), "accessory");
    if (acc.values.size() != cfg.size()) schema_fail("accessory length must equal n");
    return acc;
  }
  return reduce_accessory(cfg, get_cplx_list(m.at("free"), "free"));
}

SolveOptions make_solve_options(const json& m, const RunOptions& ro) {
  SolveOptions so;
  if (m.contains("tolerances") && m.at("tolerances").is_object()) {
    const json& t = m.at("tolerances");
    if (t.contains("tol")) so.tol = get_num(t.at("tol"), "tolerances.tol");
    if (t.contains("surface_tol")) {
      so.surface_tol = get_num(t.at("surface_tol"), "tolerances.surface_tol");
    }
    if (t.contains("transport_rel")) {
      so.transport.rel_tol = get_num(t.at("transport_rel"), "tolerances.transport_rel");
    }
    if (t.contains("transport_abs")) {
      so.transport.abs_tol = get_num(t.at("transport_abs"), "tolerances.transport_abs");
    }
  }
  if (ro.tol > 0.0) so.tol = ro.tol;
  so.transport.threads = ro.threads;
  return so;
}

PathSpec parse_cycle(const json& v, const char* what) {
  PathSpec p;
  p.vertices = get_cplx_list(v, what);
  p.closed = true;
  if (p.vertices.size() >= 2 &&
      std::abs(p.vertices.front() - p.vertices.back()) < 1e-14) {
    p.vertices.pop_back();  // accept explicitly closed polygons
  }
  return p;
}

struct CsvFile {
  std::string suffix;
  std::string content;
};

// ---------------------------------------------------------------------------
// Command handlers. Each fills results/residuals and may lower the exit code
// to numerical (3) for partial failures.

void handle_monodromy(const json& m, const RunOptions& ro, JVal& results, JVal& residuals,
                      std::vector<std::string>&, std::vector<CsvFile>&, int&) {
  const OperConfig cfg = parse_config(m);
  const AccessoryVector acc = parse_accessory(m, cfg);
  const SolveOptions so = make_solve_options(m, ro);
  const Oper oper = build_oper(cfg, acc);
  const MonodromyRep rep = monodromy_rep(oper, so.transport);
  const TraceCoordinates tc = trace_coordinates(rep);

  results.set("basepoint", JVal::of(rep.basepoint));
  JVal mats = JVal::array();
  for (const Mat2& M : rep.matrices) mats.push(mat_to_json(M));
  results.set("matrices", std::move(mats));
  JVal traces = JVal::object();
  traces.set("L", JVal::list(tc.L));
  if (tc.has_pairwise) {
    traces.set("Ls", JVal::of(tc.Ls));
    traces.set("Lt", JVal::of(tc.Lt));
    traces.set("Lu", JVal::of(tc.Lu));
  }
  results.set("traces", std::move(traces));

  JVal dets = JVal::array();
  for (const Mat2& M : rep.matrices) dets.push(JVal::of(std::abs(det(M) - 1.0)));
  residuals.set("det", std::move(dets));
  residuals.set("cyclic", JVal::of(cyclic_residual(rep)));
  if (tc.has_pairwise) {
    residuals.set("quartic", JVal::of(std::abs(quartic_residual(tc))));
  }
  const auto inf = infinity_constraints_residual(oper);
  JVal infv = JVal::array();
  for (const cplx& v : inf) infv.push(JVal::of(std::abs(v)));
  residuals.set("infinity", std::move(infv));
}

void handle_fn(const json& m, const RunOptions& ro, JVal& results, JVal& residuals,
               std::vector<std::string>&, std::vector<CsvFile>&, int&) {
  const SolveOptions so = make_solve_options(m, ro);
  if (m.contains("lambda")) {
    FNCoords fn;
    fn.lambda = get_cplx(m.at("lambda"), "lambda");
    fn.kappa = get_cplx(need(m, "kappa"), "kappa");
    fn.nu = m.contains("nu") ? static_cast<int>(get_int(m.at("nu"), "nu")) : 1;
    const std::vector<cplx> bl = get_cplx_list(need(m, "boundary"), "boundary");
    if (bl.size() != 4) schema_fail("boundary must list four traces");
    const TraceCoordinates tc =
        fn_to_traces(fn, {bl[0], bl[1], bl[2], bl[3]});
    JVal traces = JVal::object();
    traces.set("L", JVal::list(tc.L));
    traces.set("Ls", JVal::of(tc.Ls));
    traces.set("Lt", JVal::of(tc.Lt));
    traces.set("Lu", JVal::of(tc.Lu));
    results.set("traces", std::move(traces));
    residuals.set("quartic", JVal::of(std::abs(quartic_residual(tc))));
    return;
  }
  const json& t = need(m, "traces");
  TraceCoordinates tc;
  tc.L = get_cplx_list(need(t, "L"), "traces.L");
  tc.Ls = get_cplx(need(t, "Ls"), "traces.Ls");
  tc.Lt = get_cplx(need(t, "Lt"), "traces.Lt");
  tc.Lu = get_cplx(need(t, "Lu"), "traces.Lu");
  tc.has_pairwise = true;
  const int nu = m.contains("nu") ? static_cast<int>(get_int(m.at("nu"), "nu")) : 1;
  const FNCoords fn = traces_to_fn(tc, nu, nullptr, so.surface_tol);
  results.set("lambda", JVal::of(fn.lambda));
  results.set("kappa", JVal::of(fn.kappa));
  results.set("nu", JVal::of(fn.nu));
  residuals.set("quartic", JVal::of(std::abs(quartic_residual(tc))));
}

void handle_solve(const json& m, const RunOptions& ro, JVal& results, JVal& residuals,
                  std::vector<std::string>& warnings, std::vector<CsvFile>& csvs,
                  int& code) {
  const OperConfig cfg = parse_config(m);
  const SolveOptions so = make_solve_options(m, ro);
  const cplx guess = get_cplx(need(m, "initial_guess"), "initial_guess");
  const json& ls = need(m, "labels");
  if (!ls.is_array() || ls.empty()) schema_fail("labels must be a nonempty array");

  JVal points = JVal::array();
  double max_residual = 0.0;
  bool any_failed = false;
  std::string csv = "n,m,re_E,im_E,accepted\n";
  for (const auto& lj : ls) {
    QuantLabel label;
    label.n = get_int(need(lj, "n"), "label n");
    label.m = get_int(need(lj, "m"), "label m");
    label.nu = lj.contains("nu") ? static_cast<int>(get_int(lj.at("nu"), "label nu")) : 1;
    JVal pj = JVal::object();
    JVal lab = JVal::object();
    lab.set("n", JVal::of(static_cast<long long>(label.n)));
    lab.set("m", JVal::of(static_cast<long long>(label.m)));
    lab.set("nu", JVal::of(label.nu));
    pj.set("label", std::move(lab));
    try {
      const SpectrumPoint pt = solve_spectrum(cfg, label, {guess}, so);
      pj.set("accepted", JVal::of(pt.accepted));
      pj.set("eigenvalues", JVal::list(pt.eigenvalues));
      pj.set("accessory", JVal::list(pt.accessory.values));
      pj.set("lambda", JVal::of(pt.fn.lambda));
      pj.set("kappa", JVal::of(pt.fn.kappa));
      pj.set("holonomy", JVal::of(to_string(pt.holonomy)));
      pj.set("hermitian_form", mat_to_json(pt.hermitian_form));
      if (pt.holonomy == HolonomyClass::SL2R) {
        pj.set("realiser", mat_to_json(pt.realiser));
      }
      pj.set("iterations", JVal::of(pt.iterations));
      JVal res = JVal::array();
      res.push(JVal::of(pt.residual[0]));
      res.push(JVal::of(pt.residual[1]));
      pj.set("residual", std::move(res));
      pj.set("trace_reality", JVal::of(pt.trace_reality));
      if (!pt.warning.empty()) {
        pj.set("warning", JVal::of(pt.warning));
        warnings.push_back("label (" + std::to_string(label.n) + "," +
                           std::to_string(label.m) + "): " + pt.warning);
      }
      max_residual = std::max(max_residual,
                              std::max(std::abs(pt.residual[0]), std::abs(pt.residual[1])));
      csv += std::to_string(label.n) + "," + std::to_string(label.m) + "," +
             print_double(pt.eigenvalues[0].real()) + "," +
             print_double(pt.eigenvalues[0].imag()) + "," +
             (pt.accepted ? "1" : "0") + "\n";
    } catch (const Error& e) {
      any_failed = true;
      pj.set("error", JVal::of(std::string(e.what())));
    }
    points.push(std::move(pj));
  }
  results.set("points", std::move(points));
  residuals.set("max_residual", JVal::of(max_residual));
  if (any_failed) code = static_cast<int>(errc::numerical);
  csvs.push_back({"_spectrum.csv", csv});
}

void handle_yang(const json& m, const RunOptions& ro, JVal& results, JVal& residuals,
                 std::vector<std::string>&, std::vector<CsvFile>& csvs, int&) {
  bool handled = false;
  if (m.contains("upsilon")) {
    const cplx x = get_cplx(need(m.at("upsilon"), "x"), "upsilon.x");
    results.set("upsilon", JVal::of(upsilon_cl(x)));
    handled = true;
  }
  if (m.contains("pants")) {
    const json& p = m.at("pants");
    PantsLengths l;
    l.l1 = get_cplx(need(p, "l1"), "pants.l1");
    l.l2 = get_cplx(need(p, "l2"), "pants.l2");
    l.l3 = get_cplx(need(p, "l3"), "pants.l3");
    results.set("pants_N", JVal::of(pants_N(l)));
    handled = true;
  }
  if (m.contains("w_path")) {
    const json& w = m.at("w_path");
    WFamily fam;
    fam.base = parse_config(m);
    fam.moving_index = w.contains("moving_index")
                           ? static_cast<std::size_t>(get_int(w.at("moving_index"),
                                                              "w_path.moving_index"))
                           : 1;
    const json& wp = need(w, "waypoints");
    if (!wp.is_array() || wp.size() < 2) schema_fail("w_path.waypoints needs >= 2 points");
    std::vector<WPathPoint> pts;
    for (const auto& e : wp) {
      WPathPoint p;
      p.lambda = get_cplx(need(e, "lambda"), "waypoint lambda");
      p.q = get_cplx(need(e, "q"), "waypoint q");
      pts.push_back(p);
    }
    const cplx seed = get_cplx(need(m, "initial_guess"), "initial_guess");
    double quad_tol = 1e-7;
    if (m.contains("tolerances") && m.at("tolerances").is_object() &&
        m.at("tolerances").contains("quad_tol")) {
      quad_tol = get_num(m.at("tolerances").at("quad_tol"), "tolerances.quad_tol");
    }
    const SolveOptions so = make_solve_options(m, ro);
    const WPathSample ws = w_increment(fam, pts, seed, so, quad_tol);
    results.set("increment", JVal::of(ws.increment));
    results.set("increment_scaled", JVal::of(ws.increment_scaled));
    results.set("levels", JVal::of(ws.levels));
    results.set("n_samples", JVal::of(static_cast<long long>(ws.path.size())));

    // Cumulative W along the samples for plotting: trapezoid between
    // consecutive evaluated points.
    std::string csv = "re_q,im_q,re_W,im_W\n";
    cplx W = 0.0;
    for (std::size_t k = 0; k < ws.path.size(); ++k) {
      if (k > 0) {
        const cplx dq = ws.path[k].q - ws.path[k - 1].q;
        const cplx dl = ws.path[k].lambda - ws.path[k - 1].lambda;
        const cplx favg = 0.5 * (ws.E[k] + ws.E[k - 1]) * dq +
                          (cplx(0, 1) / (4.0 * kPi)) * 0.5 *
                              (ws.kappa[k] + ws.kappa[k - 1]) * dl;
        W += favg;
      }
      csv += print_double(ws.path[k].q.real()) + "," + print_double(ws.path[k].q.imag()) +
             "," + print_double(W.real()) + "," + print_double(W.imag()) + "\n";
    }
    csvs.push_back({"_w.csv", csv});
    handled = true;
  }
  if (!handled) schema_fail("yang needs one of 'upsilon', 'pants', 'w_path'");
  residuals.set("none", JVal::array());
}

void handle_semiclassical(const json& m, const RunOptions& ro, JVal& results,
                          JVal& residuals, std::vector<std::string>&,
                          std::vector<CsvFile>& csvs, int&) {
  const json& cj = need(m, "curve");
  SpectralCurveData curve;
  if (cj.contains("z")) curve.z = get_cplx_list(cj.at("z"), "curve.z");
  if (cj.contains("lsq")) curve.lsq = get_cplx_list(cj.at("lsq"), "curve.lsq");
  if (cj.contains("H")) curve.H = get_cplx_list(cj.at("H"), "curve.H");
  if (cj.contains("poly")) curve.poly = get_cplx_list(cj.at("poly"), "curve.poly");

  results.set("branch_points", JVal::list(branch_points(curve)));

  std::vector<cplx> periods;
  if (m.contains("cycles")) {
    const json& cys = m.at("cycles");
    if (!cys.is_array()) schema_fail("cycles must be an array of polygons");
    JVal pv = JVal::array();
    for (const auto& cy : cys) {
      const PathSpec cycle = parse_cycle(cy, "cycle vertex");
      periods.push_back(period(curve, cycle));
      pv.push(JVal::of(periods.back()));
    }
    results.set("periods", std::move(pv));
  }
  if (m.contains("bs")) {
    if (periods.size() < 2) schema_fail("bs requires at least two cycles");
    const json& b = m.at("bs");
    const double eps1 = get_num(need(b, "eps1"), "bs.eps1");
    const long n = get_int(need(b, "n"), "bs.n");
    const long mm = get_int(need(b, "m"), "bs.m");
    const PeriodPair pp{periods[0], periods[1]};
    const RealActionPair ra = real_actions(pp);
    JVal act = JVal::object();
    act.set("b", JVal::of(ra.b));
    act.set("bD", JVal::of(ra.bD));
    results.set("actions", std::move(act));
    const auto r = bs_residual(pp, eps1, n, mm);
    JVal rv = JVal::array();
    rv.push(JVal::of(r[0]));
    rv.push(JVal::of(r[1]));
    residuals.set("bohr_sommerfeld", std::move(rv));
  }
  if (m.contains("eps_sweep")) {
    const json& ev = m.at("eps_sweep");
    if (!ev.is_array() || ev.empty()) schema_fail("eps_sweep must be a nonempty array");
    std::vector<double> eps;
    for (const auto& e : ev) eps.push_back(get_num(e, "eps_sweep entry"));
    const std::vector<cplx> l = get_cplx_list(need(m, "l"), "l");
    std::size_t pi = 0, pjj = 1;
    if (m.contains("wkb_pair")) {
      const json& wp = m.at("wkb_pair");
      if (!wp.is_array() || wp.size() != 2) schema_fail("wkb_pair must be [i, j]");
      pi = static_cast<std::size_t>(get_int(wp[0], "wkb_pair[0]"));
      pjj = static_cast<std::size_t>(get_int(wp[1], "wkb_pair[1]"));
    }
    std::size_t ci = 0;
    if (m.contains("wkb_cycle")) {
      ci = static_cast<std::size_t>(get_int(m.at("wkb_cycle"), "wkb_cycle"));
    }
    if (!m.contains("cycles") || ci >= m.at("cycles").size()) {
      schema_fail("wkb_cycle must index into cycles");
    }
    const PathSpec cycle = parse_cycle(m.at("cycles")[ci], "cycle vertex");
    const SolveOptions so = make_solve_options(m, ro);
    const WkbTable table = wkb_trace_check(curve, l, eps, cycle, pi, pjj, so.transport);
    JVal tv = JVal::object();
    tv.set("a", JVal::of(table.a));
    if (!table.warning.empty()) tv.set("warning", JVal::of(table.warning));
    JVal rows = JVal::array();
    std::string csv = "eps,err\n";
    for (const WkbRow& r : table.rows) {
      JVal rj = JVal::object();
      rj.set("eps", JVal::of(r.eps));
      rj.set("trace", JVal::of(r.trace));
      rj.set("log_branch", JVal::of(r.log_branch));
      rj.set("err", JVal::of(r.err));
      rows.push(std::move(rj));
      csv += print_double(r.eps) + "," + print_double(r.err) + "\n";
    }
    tv.set("rows", std::move(rows));
    results.set("wkb", std::move(tv));
    csvs.push_back({"_wkb.csv", csv});
  }
}

void handle_sov_check(const json& m, const RunOptions& ro, JVal& results, JVal& residuals,
                      std::vector<std::string>&, std::vector<CsvFile>&, int&) {
  if (m.contains("momenta")) {
    const json& mo = m.at("momenta");
    const std::vector<cplx> z = get_cplx_list(need(mo, "z"), "momenta.z");
    const cplx u0 = get_cplx(need(mo, "u0"), "momenta.u0");
    const std::vector<cplx> u = get_cplx_list(need(mo, "u"), "momenta.u");
    results.set("momenta", JVal::list(sov_momenta(z, u0, u)));
  }
  if (m.contains("kernel")) {
    const json& kj = m.at("kernel");
    const cplx v = sov_kernel(get_cplx_list(need(kj, "x"), "kernel.x"),
                              get_cplx_list(need(kj, "u"), "kernel.u"),
                              get_cplx_list(need(kj, "z"), "kernel.z"),
                              get_cplx_list(need(kj, "j"), "kernel.j"),
                              get_cplx(need(kj, "J"), "kernel.J"));
    results.set("kernel", JVal::of(v));
  }
  if (!m.contains("punctures")) {
    if (results.fields.empty()) schema_fail("sov-check needs a problem or momenta/kernel");
    residuals.set("none", JVal::array());
    return;
  }

  const OperConfig cfg = parse_config(m);
  const AccessoryVector acc = parse_accessory(m, cfg);
  const SolveOptions so = make_solve_options(m, ro);
  const Oper oper = build_oper(cfg, acc);
  const MonodromyRep rep = monodromy_rep(oper, so.transport);
  const HolonomyForm hf = invariant_hermitian_form(rep);

  results.set("holonomy_class", JVal::of(to_string(hf.cls)));
  results.set("nullity", JVal::of(hf.nullity));
  JVal sv = JVal::array();
  for (double s : hf.svals) sv.push(JVal::of(s));
  results.set("singular_values", std::move(sv));
  if (hf.cls == HolonomyClass::SL2R || hf.cls == HolonomyClass::SU2) {
    results.set("form", mat_to_json(hf.H));
  }

  Mat2 C;  // antisymmetric pairing, the single-valuedness reference form
  C.a = 0;
  C.b = 1;
  C.c = -1;
  C.d = 0;
  if (m.contains("form")) {
    const std::vector<cplx> fv = get_cplx_list(m.at("form"), "form");
    if (fv.size() != 4) schema_fail("form must list four entries");
    C.a = fv[0];
    C.b = fv[1];
    C.c = fv[2];
    C.d = fv[3];
  }
  Mat2 g;
  bool have_realiser = false;
  if (hf.cls == HolonomyClass::SL2R) {
    g = sl2r_realiser(hf.H);
    results.set("realiser", mat_to_json(g));
    have_realiser = true;
  }
  JVal loops = JVal::array();
  double worst = 0.0;
  const Mat2 ginv = have_realiser ? inverse(g) : Mat2::identity();
  for (std::size_t r = 0; r < rep.matrices.size(); ++r) {
    JVal lj = JVal::object();
    lj.set("index", JVal::of(static_cast<long long>(r)));
    lj.set("raw", JVal::of(form_residual(rep.matrices[r], C)));
    if (have_realiser) {
      const Mat2 R = g * rep.matrices[r] * ginv;
      const double res = form_residual(R, C);
      lj.set("realised", JVal::of(res));
      worst = std::max(worst, res);
    } else {
      worst = std::max(worst, form_residual(rep.matrices[r], C));
    }
    loops.push(std::move(lj));
  }
  results.set("loops", std::move(loops));
  residuals.set("max_single_valuedness", JVal::of(worst));
}

// ---------------------------------------------------------------------------
// Hash, cache, orchestration.

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

struct CacheHit {
  int code;
  std::string record;
};

std::optional<CacheHit> cache_lookup(const std::string& path, const std::string& hash,
                                     const std::string& command,
                                     std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  std::size_t lineno = 0;
  std::optional<CacheHit> hit;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json e = json::parse(line);
      if (e.at("hash").get<std::string>() == hash &&
          e.at("command").get<std::string>() == command) {
        hit = CacheHit{e.at("code").get<int>(), e.at("record").get<std::string>()};
      }
    } catch (const std::exception&) {
      warnings.push_back("cache: skipped corrupt line " + std::to_string(lineno));
    }
  }
  return hit;
}

void cache_append(const std::string& path, const std::string& hash,
                  const std::string& command, int code, const std::string& record) {
  json e;
  e["hash"] = hash;
  e["command"] = command;
  e["code"] = code;
  e["record"] = record;
  std::ofstream out(path, std::ios::app);
  if (out) out << e.dump() << "\n";
}

using Handler = void (*)(const json&, const RunOptions&, JVal&, JVal&,
                         std::vector<std::string>&, std::vector<CsvFile>&, int&);

Handler find_handler(const std::string& command) {
  if (command == "monodromy") return handle_monodromy;
  if (command == "fn") return handle_fn;
  if (command == "solve") return handle_solve;
  if (command == "yang") return handle_yang;
  if (command == "semiclassical") return handle_semiclassical;
  if (command == "sov-check") return handle_sov_check;
  return nullptr;
}

}  // namespace

const char* library_version() { return kVersion; }

std::string manifest_hash(const std::string& command, const std::string& manifest_json) {
  try {
    const json m = json::parse(manifest_json);
    return hex64(fnv1a(command + "\n" + m.dump()));
  } catch (const std::exception&) {
    return hex64(fnv1a(command + "\n" + manifest_json));
  }
}

RunResult run_command(const std::string& command, const std::string& manifest_json,
                      const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  std::string error;
  JVal results = JVal::object();
  JVal residuals = JVal::object();
  std::vector<std::string> warnings;
  std::vector<CsvFile> csvs;
  std::string hash;

  std::string cache_path = opts.cache_path;
  if (cache_path.empty()) {
    if (const char* env = std::getenv("OPERQUANT_CACHE")) cache_path = env;
  }

  try {
    const Handler handler = find_handler(command);
    if (handler == nullptr) fail_invalid("unknown command '" + command + "'");
    json m;
    try {
      m = json::parse(manifest_json);
    } catch (const std::exception& e) {
      fail_invalid(std::string("manifest: parse error: ") + e.what());
    }
    hash = hex64(fnv1a(command + "\n" + m.dump()));

    if (!cache_path.empty()) {
      const auto hit = cache_lookup(cache_path, hash, command, warnings);
      if (hit.has_value()) return {hit->code, hit->record};
    }
    handler(m, opts, results, residuals, warnings, csvs, code);
  } catch (const Error& e) {
    code = static_cast<int>(e.code());
    error = e.what();
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }

  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

  JVal record = JVal::object();
  record.set("command", JVal::of(command));
  record.set("hash", JVal::of(hash));
  record.set("version", JVal::of(kVersion));
  record.set("results", std::move(results));
  record.set("residuals", std::move(residuals));
  record.set("warnings", JVal::list(warnings));
  if (!error.empty()) record.set("error", JVal::of(error));
  record.set("timing_ms", JVal::of(ms));
  const std::string out = record.dump();

  if (code == 0 && !cache_path.empty()) {
    cache_append(cache_path, hash, command, code, out);
  }
  if (code == 0 && !opts.emit_csv.empty()) {
    for (const CsvFile& f : csvs) {
      std::ofstream fo(opts.emit_csv + f.suffix);
      if (fo) fo << f.content;
    }
  }
  return {code, out};
}

}  // namespace oq
