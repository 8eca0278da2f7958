// Command-line front end. All computation goes through the C API in
// operquant.h; this file only parses flags, reads the manifest, and routes
// the record to the requested output.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "operquant.h"

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
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
  return out;
}

int emit(const std::string& out_path, const std::string& payload) {
  if (out_path.empty() || out_path == "-") {
    std::cout << payload << "\n";
    return 0;
  }
  std::ofstream f(out_path);
  if (!f) {
    std::cerr << "cannot open output file: " << out_path << "\n";
    return 1;
  }
  f << payload << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operquant: oper monodromy, Fenchel-Nielsen coordinates, and "
               "quantisation spectra"};
  std::string command;
  std::string manifest_path;
  std::string out_path = "-";
  std::string cache_path;
  std::string csv_prefix;
  double tol = -1.0;
  int threads = 1;
  long long seed = 0;

  app.add_option("command", command,
                 "one of: monodromy, fn, solve, yang, semiclassical, sov-check")
      ->required();
  app.add_option("--manifest", manifest_path, "path to the JSON manifest")->required();
  app.add_option("--out", out_path, "output path for the result record ('-': stdout)");
  app.add_option("--cache", cache_path,
                 "append-only record cache (overrides OPERQUANT_CACHE)");
  app.add_option("--tol", tol, "override the solver tolerance");
  app.add_option("--threads", threads, "transport worker threads");
  app.add_option("--seed", seed, "seed for randomized commands");
  app.add_option("--emit-csv", csv_prefix, "prefix for CSV side outputs");
  CLI11_PARSE(app, argc, argv);

  std::ifstream mf(manifest_path);
  if (!mf) {
    const std::string rec =
        "{\"error\":\"cannot read manifest: " + json_escape(manifest_path) + "\"}";
    emit(out_path, rec);
    return 2;
  }
  std::stringstream buf;
  buf << mf.rdbuf();
  const std::string manifest = buf.str();

  std::string options = "{";
  if (tol > 0.0) options += "\"tol\":" + std::to_string(tol) + ",";
  options += "\"threads\":" + std::to_string(threads) + ",";
  options += "\"seed\":" + std::to_string(seed);
  if (!cache_path.empty()) options += ",\"cache\":\"" + json_escape(cache_path) + "\"";
  if (!csv_prefix.empty()) options += ",\"emit_csv\":\"" + json_escape(csv_prefix) + "\"";
  options += "}";

  char* record = nullptr;
  const int code = oq_run(command.c_str(), manifest.c_str(), options.c_str(), &record);
  if (record != nullptr) {
    const int ec = emit(out_path, record);
    oq_free(record);
    if (ec != 0) return ec;
  } else {
    const std::string rec =
        "{\"error\":\"" + json_escape(oq_last_error()) + "\"}";
    emit(out_path, rec);
  }
  return code;
}
