#include "operquant.h"

#include <json.hpp>

#include <array>
#include <cstdlib>
#include <cstring>
#include <string>

#include "operquant/fenchel_nielsen.hpp"
#include "operquant/manifest.hpp"
#include "operquant/monodromy.hpp"
#include "operquant/types.hpp"
#include "operquant/yang.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return 0;
  } catch (const oq::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return 1;
  } catch (...) {
    g_last_error = "unknown error";
    return 1;
  }
}

oq::cplx to_cplx(const double v[2]) { return oq::cplx(v[0], v[1]); }

void from_cplx(oq::cplx v, double out[2]) {
  out[0] = v.real();
  out[1] = v.imag();
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p != nullptr) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

oq::TraceCoordinates unpack_traces(const double traces[14]) {
  oq::TraceCoordinates tc;
  for (int k = 0; k < 4; ++k) tc.L.push_back(oq::cplx(traces[2 * k], traces[2 * k + 1]));
  tc.Ls = oq::cplx(traces[8], traces[9]);
  tc.Lt = oq::cplx(traces[10], traces[11]);
  tc.Lu = oq::cplx(traces[12], traces[13]);
  tc.has_pairwise = true;
  return tc;
}

}  // namespace

extern "C" {

const char* oq_version(void) { return oq::library_version(); }

const char* oq_last_error(void) { return g_last_error.c_str(); }

int oq_run(const char* command, const char* manifest_json, const char* options_json,
           char** record) {
  if (command == nullptr || manifest_json == nullptr || record == nullptr) {
    g_last_error = "oq_run: null argument";
    return 2;
  }
  *record = nullptr;
  int code = 1;
  const int rc = guarded([&] {
    oq::RunOptions opts;
    if (options_json != nullptr && options_json[0] != '\0') {
      nlohmann::json o;
      try {
        o = nlohmann::json::parse(options_json);
      } catch (const std::exception& e) {
        oq::fail_invalid(std::string("options: parse error: ") + e.what());
      }
      if (o.contains("tol")) opts.tol = o.at("tol").get<double>();
      if (o.contains("threads")) opts.threads = o.at("threads").get<int>();
      if (o.contains("seed")) opts.seed = o.at("seed").get<unsigned long long>();
      if (o.contains("cache")) opts.cache_path = o.at("cache").get<std::string>();
      if (o.contains("emit_csv")) opts.emit_csv = o.at("emit_csv").get<std::string>();
    }
    const oq::RunResult res = oq::run_command(command, manifest_json, opts);
    *record = dup_string(res.record_json);
    if (*record == nullptr) oq::fail_numerical("oq_run: allocation failed");
    code = res.code;
  });
  if (rc != 0) return rc;
  if (code != 0) g_last_error = "command failed, see record error field";
  return code;
}

void oq_free(char* p) { std::free(p); }

int oq_upsilon(const double x[2], double out[2]) {
  return guarded([&] { from_cplx(oq::upsilon_cl(to_cplx(x)), out); });
}

int oq_pants_n(const double l1[2], const double l2[2], const double l3[2],
               double out[2]) {
  return guarded([&] {
    oq::PantsLengths l;
    l.l1 = to_cplx(l1);
    l.l2 = to_cplx(l2);
    l.l3 = to_cplx(l3);
    from_cplx(oq::pants_N(l), out);
  });
}

int oq_quartic_residual(const double traces[14], double* out) {
  return guarded([&] { *out = std::abs(oq::quartic_residual(unpack_traces(traces))); });
}

int oq_fn_to_traces(const double lambda[2], const double kappa[2], int nu,
                    const double boundary[8], double out[6]) {
  return guarded([&] {
    oq::FNCoords fn;
    fn.lambda = to_cplx(lambda);
    fn.kappa = to_cplx(kappa);
    fn.nu = nu;
    std::array<oq::cplx, 4> b;
    for (int k = 0; k < 4; ++k) b[k] = oq::cplx(boundary[2 * k], boundary[2 * k + 1]);
    const oq::TraceCoordinates tc = oq::fn_to_traces(fn, b);
    from_cplx(tc.Ls, out);
    from_cplx(tc.Lt, out + 2);
    from_cplx(tc.Lu, out + 4);
  });
}

int oq_traces_to_fn(const double traces[14], int nu, double out[4]) {
  return guarded([&] {
    const oq::FNCoords fn = oq::traces_to_fn(unpack_traces(traces), nu);
    from_cplx(fn.lambda, out);
    from_cplx(fn.kappa, out + 2);
  });
}

}  // extern "C"
