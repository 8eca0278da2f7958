#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/quantiser.hpp"

using oq::cplx;
using oq::Mat2;
using oqtest::dist;

namespace {

oq::Oper zero_oper() {
  oq::OperConfig cfg;
  cfg.punctures = {{cplx(0, 0), 0.0, {}}, {cplx(1, 0), 0.0, {}}, {cplx(2, 0), 0.0, {}}};
  return oq::build_oper(cfg, oq::AccessoryVector{{0.0, 0.0, 0.0}});
}

}  // namespace

TEST_CASE("zero oper transports to the identity") {
  const oq::Oper op = zero_oper();
  const oq::MonodromyRep rep = oq::monodromy_rep(op, oq::TransportOptions{});
  REQUIRE(rep.matrices.size() == 3);
  for (const Mat2& M : rep.matrices) {
    CHECK(oq::fnorm(M - Mat2::identity()) < 1e-12);
    CHECK(std::abs(oq::det(M) - 1.0) < 1e-12);
  }
  CHECK(oq::cyclic_residual(rep) < 1e-12);
}

TEST_CASE("open path transport has unit determinant") {
  const oq::Oper op = zero_oper();
  oq::PathSpec path;
  path.vertices = {cplx(0.5, 1.0), cplx(0.5, 2.0), cplx(-1.0, 2.0)};
  path.closed = false;
  const Mat2 T = oq::transport(op, path, {});
  CHECK(std::abs(oq::det(T) - 1.0) < 1e-12);
}

TEST_CASE("transport composes contravariantly along concatenation") {
  oq::OperConfig cfg;
  cfg.punctures = {{cplx(0, 0), cplx(0.12, 0), {}},
                   {cplx(1, 0), cplx(0.07, 0), {}},
                   {cplx(2.5, 0.5), cplx(0.19, 0), {}}};
  const oq::AccessoryVector acc = oq::reduce_accessory(cfg, {});
  const oq::Oper op = oq::build_oper(cfg, acc);

  const cplx a(0.4, 1.2), b(1.6, 1.1), c(2.2, -0.9);
  oq::PathSpec p1{{a, b}, false}, p2{{b, c}, false}, whole{{a, b, c}, false};
  const Mat2 T1 = oq::transport(op, p1, {});
  const Mat2 T2 = oq::transport(op, p2, {});
  const Mat2 T = oq::transport(op, whole, {});
  CHECK(oq::fnorm(T - T2 * T1) < 1e-10);
}

TEST_CASE("keyhole loop traces match the indicial prediction") {
  oq::OperConfig cfg;
  cfg.punctures = {{cplx(0.3, 0.1), cplx(0.11, 0.03), {}},
                   {cplx(1.2, -0.4), cplx(-0.23, 0.07), {}},
                   {cplx(-0.7, 0.9), cplx(0.19, -0.12), {}}};
  const oq::AccessoryVector acc = oq::reduce_accessory(cfg, {});
  const oq::Oper op = oq::build_oper(cfg, acc);
  const oq::MonodromyRep rep = oq::monodromy_rep(op, oq::TransportOptions{});
  for (std::size_t r = 0; r < 3; ++r) {
    const oq::LocalExponents le = oq::local_exponents(op, r);
    CHECK(dist(oq::trace(rep.matrices[r]), le.predicted_trace) < 1e-9);
    CHECK(std::abs(oq::det(rep.matrices[r]) - 1.0) < 1e-11);
  }
  CHECK(oq::cyclic_residual(rep) < 1e-9);
}

TEST_CASE("four punctures produce the three pairwise traces") {
  oq::OperConfig cfg = oqtest::reference_config();
  const oq::AccessoryVector acc = oq::reduce_accessory(cfg, {cplx(0.3, 0.0)});
  const oq::Oper op = oq::build_oper(cfg, acc);
  const oq::MonodromyRep rep = oq::monodromy_rep(op, oq::TransportOptions{});
  REQUIRE(rep.matrices.size() == 4);
  const oq::TraceCoordinates tc = oq::trace_coordinates(rep);
  REQUIRE(tc.has_pairwise);

  // Pairwise traces agree with products of the stored generators.
  CHECK(dist(tc.Ls, oq::trace(rep.matrices[0] * rep.matrices[1])) < 1e-12);
  CHECK(dist(tc.Lt, oq::trace(rep.matrices[0] * rep.matrices[2])) < 1e-12);
  CHECK(dist(tc.Lu, oq::trace(rep.matrices[1] * rep.matrices[2])) < 1e-12);

  // The seven traces land on the quartic surface.
  CHECK(std::abs(oq::quartic_residual(tc)) < 1e-8);
}

TEST_CASE("quartic residual detects off-surface data") {
  oq::TraceCoordinates tc;
  tc.L = {0.0, 0.0, 0.0, 0.0};
  tc.Ls = 1.0;
  tc.Lt = 0.0;
  tc.Lu = 0.0;
  tc.has_pairwise = true;
  CHECK(dist(oq::quartic_residual(tc), cplx(-3.0, 0.0)) < 1e-15);
}

TEST_CASE("clearance violations are rejected") {
  const oq::Oper op = zero_oper();
  oq::PathSpec through;
  through.vertices = {cplx(-1, 0), cplx(3, 0)};  // passes through all punctures
  through.closed = false;
  oq::TransportOptions opts;
  opts.clearance = 0.05;
  CHECK_THROWS_AS(oq::transport(op, through, opts), oq::Error);
}

TEST_CASE("default basepoint sits above the configuration") {
  const oq::OperConfig cfg = oqtest::reference_config();
  const cplx bp = oq::default_basepoint(cfg);
  for (const auto& p : cfg.punctures) {
    CHECK(std::abs(bp - p.z) > 1.0);
  }
}

TEST_CASE("random ensemble satisfies determinant and cyclic identities") {
  std::mt19937_64 rng(271828);
  int done = 0;
  int attempts = 0;
  while (done < 3 && attempts < 30) {
    ++attempts;
    const oqtest::EnsembleDraw draw = oqtest::random_constrained_oper(rng, 2.0, 0.35);
    const oq::Oper op = oq::build_oper(draw.config, draw.accessory);
    const oq::MonodromyRep rep = oq::monodromy_rep(op, oq::TransportOptions{});
    double maxnorm = 0.0;
    for (const Mat2& M : rep.matrices) maxnorm = std::max(maxnorm, oq::fnorm(M));
    if (maxnorm > 1e3) continue;  // det of a stored matrix is only good to |M|^2 eps
    ++done;
    for (const Mat2& M : rep.matrices) CHECK(std::abs(oq::det(M) - 1.0) < 1e-10);
    CHECK(oq::cyclic_residual(rep) < 1e-8);
  }
  CHECK(done == 3);
}
