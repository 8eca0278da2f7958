#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "operquant/oper.hpp"
#include "operquant/quantiser.hpp"

using oq::cplx;
using oqtest::dist;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("reduce_accessory zeroes the infinity constraints") {
  std::mt19937_64 rng(777);
  for (int k = 0; k < 5; ++k) {
    oq::OperConfig cfg;
    auto z = oqtest::random_positions(rng, 5, 2.0, 0.3);
    for (const cplx& p : z) cfg.punctures.push_back({p, oqtest::random_weight(rng), {}});
    std::uniform_real_distribution<double> u(-1, 1);
    const std::vector<cplx> free_vals = {cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
    const oq::AccessoryVector acc = oq::reduce_accessory(cfg, free_vals);
    REQUIRE(acc.values.size() == 5);
    CHECK(dist(acc.values[0], free_vals[0]) == 0.0);
    CHECK(dist(acc.values[1], free_vals[1]) == 0.0);
    const auto res = oq::infinity_constraints_residual(oq::build_oper(cfg, acc));
    CHECK(std::abs(res[0]) < 1e-12);
    CHECK(std::abs(res[1]) < 1e-12);
    CHECK(std::abs(res[2]) < 1e-12);
  }
}

TEST_CASE("reduce_accessory matches the hand-solved three-puncture case") {
  oq::OperConfig cfg;
  cfg.punctures = {{cplx(0, 0), cplx(0.1, 0), {}},
                   {cplx(1, 0), cplx(0.1, 0), {}},
                   {cplx(2, 0), cplx(0.1, 0), {}}};
  const oq::AccessoryVector acc = oq::reduce_accessory(cfg, {});
  REQUIRE(acc.values.size() == 3);
  CHECK(dist(acc.values[0], cplx(0.15, 0)) < 1e-14);
  CHECK(dist(acc.values[1], cplx(0.0, 0)) < 1e-14);
  CHECK(dist(acc.values[2], cplx(-0.15, 0)) < 1e-14);
}

TEST_CASE("reduce_accessory validates the free-value count") {
  oq::OperConfig cfg = oqtest::reference_config();
  CHECK_THROWS_AS(oq::reduce_accessory(cfg, {}), oq::Error);
  CHECK_THROWS_AS(oq::reduce_accessory(cfg, {cplx(0), cplx(0)}), oq::Error);
}

TEST_CASE("quantisation residual reads the label") {
  oq::FNCoords fn{cplx(2.0 * kPi * 3, 1.7), cplx(kPi * 2, -0.4), 1};
  const auto r = oq::quantisation_residual(fn, {3, 2, 1});
  CHECK(std::abs(r[0]) < 1e-14);
  CHECK(std::abs(r[1]) < 1e-14);
  const auto shifted = oq::quantisation_residual(fn, {3, 1, 1});
  CHECK(shifted[1] == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("lambda_of_E reproduces the scanned band structure") {
  const oq::OperConfig cfg = oqtest::reference_config();
  oq::FnTracker tracker;
  const oq::LambdaFrame f = oq::lambda_of_E(cfg, {cplx(0.0, 0.0)}, &tracker, {});
  // hyperbolic band: Re lambda pinned at 2 pi, cutting trace below -2
  CHECK(f.fn.lambda.real() == doctest::Approx(2.0 * kPi).epsilon(1e-9));
  CHECK(f.traces.Ls.real() < -2.0);
  CHECK(std::abs(f.traces.Ls.imag()) < 1e-7);
}

TEST_CASE("solve_spectrum converges on the reference configuration") {
  const oq::OperConfig cfg = oqtest::reference_config();
  const oq::SolveOptions so = oqtest::tight_solve_options();
  const oq::SpectrumPoint pt = oq::solve_spectrum(cfg, {1, 0, 1}, {cplx(0.31, 0)}, so);
  CHECK(pt.accepted);
  CHECK(pt.holonomy == oq::HolonomyClass::SL2R);
  CHECK(std::abs(pt.residual[0]) < 1e-9);
  CHECK(std::abs(pt.residual[1]) < 1e-9);
  CHECK(pt.trace_reality < 1e-7);
  // frozen eigenvalue of this configuration at label (1,0)
  CHECK(dist(pt.eigenvalues[0], cplx(0.30643134347248, 0)) < 1e-8);
  CHECK(dist(pt.accessory.values[0], pt.eigenvalues[0]) == 0.0);
  CHECK(pt.iterations <= 25);
}

TEST_CASE("solve_spectrum rejects wrong shapes") {
  oq::OperConfig cfg = oqtest::reference_config();
  cfg.punctures.pop_back();
  CHECK_THROWS_AS(oq::solve_spectrum(cfg, {1, 0, 1}, {cplx(0, 0)}, {}), oq::Error);

  const oq::OperConfig good = oqtest::reference_config();
  CHECK_THROWS_AS(oq::solve_spectrum(good, {1, 0, 2}, {cplx(0, 0)}, {}), oq::Error);
  CHECK_THROWS_AS(oq::solve_spectrum(good, {1, 0, 1}, {}, {}), oq::Error);
}

TEST_CASE("E_of_lambda inverts lambda_of_E") {
  const oq::OperConfig cfg = oqtest::reference_config();
  const oq::SolveOptions so = oqtest::tight_solve_options();
  oq::FnTracker tracker;
  const cplx e0(0.2, 0.0);
  const oq::LambdaFrame f = oq::lambda_of_E(cfg, {e0}, &tracker, so);

  oq::FnTracker inv_tracker;
  const oq::InverseFrame inv = oq::E_of_lambda(cfg, f.fn.lambda, cplx(0.25, 0.0),
                                               &inv_tracker, so);
  CHECK(dist(inv.free_value, e0) < 1e-7);
}
