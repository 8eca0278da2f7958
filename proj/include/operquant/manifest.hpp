#pragma once

#include <string>
#include <vector>

namespace oq {

struct RunOptions {
  double tol = -1.0;        // > 0 overrides the solver tolerance
  int threads = 1;
  unsigned long long seed = 0;
  std::string cache_path;   // empty: consult OPERQUANT_CACHE, else no cache
  std::string emit_csv;     // file prefix; empty disables CSV side outputs
};

struct RunResult {
  int code = 0;             // 0 ok, 1 internal, 2 schema, 3 numerical
  std::string record_json;  // one line, canonical formatting
};

// Parses the manifest, dispatches the command (monodromy, fn, solve, yang,
// semiclassical, sov-check), and produces the result record. All failures
// are captured in the record's error field with the matching code; this
// function does not throw. Caching and CSV emission are handled here.
RunResult run_command(const std::string& command, const std::string& manifest_json,
                      const RunOptions& opts);

const char* library_version();

// FNV-1a 64 over the canonical serialization, hex-printed; exposed for tests.
std::string manifest_hash(const std::string& command, const std::string& manifest_json);

}  // namespace oq
