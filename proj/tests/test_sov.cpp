#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "operquant/monodromy.hpp"
#include "operquant/oper.hpp"
#include "operquant/sov.hpp"

using oq::cplx;
using oq::Mat2;
using oqtest::dist;

namespace {

cplx expi(double t) { return std::polar(1.0, t); }

Mat2 conj_by(const Mat2& g, const Mat2& m) { return g * m * oq::inverse(g); }

double max_imag(const Mat2& m) {
  return std::max(std::max(std::abs(m.a.imag()), std::abs(m.b.imag())),
                  std::max(std::abs(m.c.imag()), std::abs(m.d.imag())));
}

}  // namespace

TEST_CASE("separated momenta on a three puncture example") {
  const std::vector<cplx> z = {cplx(0), cplx(1), cplx(2)};
  const auto p = oq::sov_momenta(z, cplx(1.0), {cplx(0)});
  REQUIRE(p.size() == 3);
  CHECK(dist(p[0], cplx(0)) < 1e-15);
  CHECK(dist(p[1], cplx(-1)) < 1e-15);
  CHECK(dist(p[2], cplx(1)) < 1e-15);
}

TEST_CASE("separated momenta vanish at punctures hit by a variable") {
  const std::vector<cplx> z = {cplx(0.3, 0.4), cplx(-1, 2), cplx(2, -0.5)};
  const auto p = oq::sov_momenta(z, cplx(2, 1), {z[1], cplx(5, 5)});
  CHECK(std::abs(p[1]) < 1e-15);
  CHECK(std::abs(p[0]) > 0.0);
}

TEST_CASE("separated momenta scale linearly in the leading coefficient") {
  const std::vector<cplx> z = {cplx(0), cplx(1, 1), cplx(-2, 0.5)};
  const std::vector<cplx> u = {cplx(0.7, -0.3)};
  const auto p1 = oq::sov_momenta(z, cplx(1), u);
  const auto p2 = oq::sov_momenta(z, cplx(-3, 2), u);
  for (std::size_t r = 0; r < z.size(); ++r) {
    CHECK(dist(p2[r], cplx(-3, 2) * p1[r]) < 1e-13);
  }
}

TEST_CASE("product kernel with no separated variables") {
  // only the puncture-difference factor survives: 4 * 1 * 4
  const std::vector<cplx> z = {cplx(0), cplx(1), cplx(2)};
  const cplx v = oq::sov_kernel({cplx(1), cplx(0), cplx(0)}, {}, z,
                                {cplx(0), cplx(0), cplx(0)}, cplx(0));
  CHECK(dist(v, cplx(16.0, 0)) < 1e-12);
}

TEST_CASE("product kernel hand-evaluated example") {
  // sum factor |-22|^2, weights (1/15)^2 and (1/8)^1, pair factor |2|^2
  const std::vector<cplx> z = {cplx(0), cplx(1)};
  const std::vector<cplx> u = {cplx(3), cplx(5)};
  const cplx v = oq::sov_kernel({cplx(2), cplx(1)}, u, z, {cplx(0), cplx(-0.5)}, cplx(1));
  CHECK(dist(v, cplx(1936.0 / 1800.0, 0)) < 1e-12);
}

TEST_CASE("product kernel with complex spin exponent keeps the real magnitude") {
  const std::vector<cplx> z = {cplx(0), cplx(1)};
  const std::vector<cplx> u = {cplx(3), cplx(5)};
  const cplx v = oq::sov_kernel({cplx(2), cplx(1)}, u, z, {cplx(0), cplx(-0.5)},
                                cplx(0, 1));
  CHECK(std::abs(std::abs(v) - 4.0 / 1800.0) < 1e-14);
  // phase comes only from the complex exponent on |sum| = 22
  const double want = std::remainder(2.0 * std::log(22.0), 2.0 * std::numbers::pi);
  CHECK(std::abs(std::remainder(std::arg(v) - want, 2.0 * std::numbers::pi)) < 1e-12);
}

TEST_CASE("product kernel vanishes on coincident separated variables") {
  const std::vector<cplx> z = {cplx(0), cplx(1)};
  const cplx v = oq::sov_kernel({cplx(1), cplx(1)}, {cplx(3), cplx(3)}, z,
                                {cplx(0), cplx(0)}, cplx(0));
  CHECK(std::abs(v) == 0.0);
}

TEST_CASE("product kernel rejects a variable on a puncture with generic spin") {
  const std::vector<cplx> z = {cplx(0), cplx(1)};
  CHECK_THROWS_AS(oq::sov_kernel({cplx(1), cplx(1)}, {cplx(0)}, z,
                                 {cplx(0), cplx(0)}, cplx(1)),
                  oq::Error);
}

TEST_CASE("product kernel treats zero exponents as unit factors") {
  // u sits on z_0 but j_0 = -1 removes the singular weight
  const std::vector<cplx> z = {cplx(0), cplx(1)};
  const cplx v = oq::sov_kernel({cplx(0), cplx(1)}, {cplx(0)}, z,
                                {cplx(-1), cplx(0)}, cplx(1));
  CHECK(dist(v, cplx(1.0, 0)) < 1e-13);
}

TEST_CASE("holonomy classifier flags scalar representations as reducible") {
  const auto hf = oq::invariant_hermitian_form(
      std::vector<Mat2>{Mat2::identity(), Mat2::identity()});
  CHECK(hf.cls == oq::HolonomyClass::REDUCIBLE);
  CHECK(hf.nullity == 4);
}

TEST_CASE("holonomy classifier recovers a conjugated real representation") {
  const Mat2 A{1.0, 1.0, 0.0, 1.0};
  const Mat2 B{1.0, 0.0, 1.0, 1.0};
  const Mat2 g{cplx(1, 0.4), cplx(0, 1), cplx(0.3, 0), cplx(1.2, -0.2)};
  const std::vector<Mat2> rep = {conj_by(g, A), conj_by(g, B)};

  const auto hf = oq::invariant_hermitian_form(rep);
  REQUIRE(hf.cls == oq::HolonomyClass::SL2R);
  CHECK(hf.nullity == 1);
  for (const Mat2& M : rep) CHECK(oq::form_residual(M, hf.H) < 1e-12);

  const Mat2 r = oq::sl2r_realiser(hf.H);
  for (const Mat2& M : rep) CHECK(max_imag(conj_by(r, M)) < 1e-9);
}

TEST_CASE("holonomy classifier recognises a unitary representation") {
  const Mat2 A{expi(0.3), 0.0, 0.0, expi(-0.3)};
  const Mat2 B{std::cos(0.7), cplx(0, 1) * std::sin(0.7),
               cplx(0, 1) * std::sin(0.7), std::cos(0.7)};
  const Mat2 g{cplx(1.1, 0.2), cplx(-0.3, 0.5), cplx(0, 0.1), cplx(0.9, 0)};
  const std::vector<Mat2> rep = {conj_by(g, A), conj_by(g, B)};

  const auto hf = oq::invariant_hermitian_form(rep);
  CHECK(hf.cls == oq::HolonomyClass::SU2);
  for (const Mat2& M : rep) CHECK(oq::form_residual(M, hf.H) < 1e-12);
}

TEST_CASE("holonomy classifier reports no form for a generic complex pair") {
  const cplx a = std::exp(cplx(0.3, 0.2));
  const Mat2 A{a, 0.0, 0.0, 1.0 / a};
  const Mat2 B{1.0, 1.0, cplx(0.5, 0.1), cplx(1.5, 0.1)};
  const auto hf = oq::invariant_hermitian_form(std::vector<Mat2>{A, B});
  CHECK(hf.cls == oq::HolonomyClass::NONE);
  CHECK(hf.nullity == 0);
}

TEST_CASE("form residual measures the invariance defect") {
  const Mat2 A{1.0, 1.0, 0.0, 1.0};
  const Mat2 J{0.0, cplx(0, 1), cplx(0, -1), 0.0};
  CHECK(oq::form_residual(A, J) < 1e-15);
  CHECK(oq::form_residual(A, Mat2::identity()) > 0.5);
}

TEST_CASE("single-valuedness residual vanishes for trivial monodromy") {
  oq::OperConfig cfg;
  cfg.punctures = {{cplx(0, 0), cplx(0, 0), {}},
                   {cplx(1, 0), cplx(0, 0), {}},
                   {cplx(2, 0), cplx(0, 0), {}}};
  const oq::Oper op = oq::build_oper(cfg, {{{cplx(0), cplx(0), cplx(0)}}});
  const oq::PathSpec loop = oq::keyhole_loop(op.config, 1, oq::default_basepoint(op.config));
  const Mat2 C{1.0, 0.0, 0.0, -1.0};
  CHECK(oq::single_valuedness_residual(op, loop, C) < 1e-10);
}
