#include "operquant/oper.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace oq {

namespace {

double config_scale(const OperConfig& config) {
  double s = 1.0;
  for (const auto& p : config.punctures) s = std::max(s, std::abs(p.z));
  return s;
}

}  // namespace

OperConfig validate_config(OperConfig config) {
  if (config.epsilon1 == cplx(0.0)) fail_invalid("epsilon1 must be nonzero");
  const std::size_t n = config.punctures.size();
  if (n < 3) fail_invalid("need at least 3 punctures");
  const double scale = config_scale(config);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(config.punctures[i].z - config.punctures[j].z) <= 1e-12 * scale) {
        std::ostringstream os;
        os << "duplicate punctures (indices " << i << ", " << j << ")";
        fail_invalid(os.str());
      }
  const cplx e2 = config.epsilon1 * config.epsilon1;
  for (auto& p : config.punctures)
    if (p.spin) p.delta = e2 * (*p.spin) * (*p.spin + 1.0);
  return config;
}

double min_separation(const OperConfig& config) {
  double m = std::numeric_limits<double>::infinity();
  const std::size_t n = config.punctures.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      m = std::min(m, std::abs(config.punctures[i].z - config.punctures[j].z));
  return m;
}

Oper build_oper(OperConfig config, AccessoryVector accessory) {
  config = validate_config(std::move(config));
  if (accessory.values.size() != config.punctures.size())
    fail_invalid("accessory length mismatch");
  return Oper{std::move(config), std::move(accessory)};
}

cplx eval_t(const Oper& oper, cplx u) {
  const double scale = config_scale(oper.config);
  cplx t = 0.0;
  for (std::size_t r = 0; r < oper.config.punctures.size(); ++r) {
    const cplx d = u - oper.config.punctures[r].z;
    if (std::abs(d) <= 1e-13 * scale) fail_invalid("evaluation at a puncture");
    t += oper.config.punctures[r].delta / (d * d) + oper.accessory.values[r] / d;
  }
  return t;
}

std::array<cplx, 3> infinity_constraints_residual(const Oper& oper) {
  cplx c0 = 0.0, c1 = 0.0, c2 = 0.0;
  for (std::size_t r = 0; r < oper.config.punctures.size(); ++r) {
    const cplx z = oper.config.punctures[r].z;
    const cplx dl = oper.config.punctures[r].delta;
    const cplx E = oper.accessory.values[r];
    c0 += E;
    c1 += E * z + dl;
    c2 += E * z * z + 2.0 * dl * z;
  }
  return {c0, c1, c2};
}

LocalExponents local_exponents(const Oper& oper, std::size_t r) {
  if (r >= oper.config.punctures.size()) fail_invalid("puncture index out of range");
  const cplx e2 = oper.config.epsilon1 * oper.config.epsilon1;
  const cplx ratio = oper.config.punctures[r].delta / e2;
  // rho = 1/2 +- sqrt(1/4 - delta/eps1^2), principal square root
  const cplx disc = std::sqrt(0.25 - ratio);
  LocalExponents le;
  le.rho_plus = 0.5 + disc;
  le.rho_minus = 0.5 - disc;
  const cplx diff = le.rho_plus - le.rho_minus;
  le.resonant = std::abs(diff.imag()) < 1e-10 &&
                std::abs(diff.real() - std::round(diff.real())) < 1e-10;
  const cplx twopii(0.0, 2.0 * std::numbers::pi);
  le.predicted_trace = std::exp(twopii * le.rho_plus) + std::exp(twopii * le.rho_minus);
  // 2 cos(2 pi m) = predicted trace; normalize to Im m >= 0, Re m in [0,1)
  cplx m = std::acos(le.predicted_trace / 2.0) / (2.0 * std::numbers::pi);
  if (m.imag() < 0.0) m = -m;
  double re = m.real() - std::floor(m.real());
  if (re >= 1.0) re -= 1.0;  // guard against floor rounding at the boundary
  le.m = cplx(re, m.imag());
  return le;
}

}  // namespace oq
