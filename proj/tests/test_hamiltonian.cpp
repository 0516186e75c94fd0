#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hjhom/hamiltonian.hpp"

using namespace hjhom;
using nlohmann::json;

namespace {

HamiltonianSystem example_a() {
  return system_from_json(json::parse(R"J({
    "M": 1, "components": [{"kind": "weakly_coupled", "G": "abs(p)", "convex": true}],
    "coupling": [["2+cos(2*pi*y)"]]})J"));
}

HamiltonianSystem custom2(const char* h1, const char* h2) {
  json j = {{"M", 2},
            {"components", json::array({json{{"kind", "custom"}, {"H", h1}}, json{{"kind", "custom"}, {"H", h2}}})}};
  return system_from_json(j);
}

double eval1(const HamiltonianSystem& s, double y, double r, double p) {
  const double rr[1] = {r};
  const double pp[1] = {p};
  return s.eval(0, {0.3, 0}, {y, 0}, rr, pp);
}

}  // namespace

TEST_CASE("eval on the worked examples") {
  auto eik = system_from_json(json::parse(
      R"J({"M": 1, "components": [{"kind": "eikonal_coupled", "speed": 1, "F": "0", "delta": 1}]})J"));
  CHECK(eval1(eik, 0.1, 0.0, 2.0) == 2.0);
  auto a = example_a();
  CHECK(eval1(a, 0.0, 1.0, 0.0) == doctest::Approx(3.0));
  CHECK(eval1(a, 0.5, 1.0, -2.0) == doctest::Approx(3.0));
  // 2 + cos(2 pi 0.25) = 2
  CHECK(eval1(a, 0.25, 1.5, 0.5) == doctest::Approx(0.5 + 2.0 * 1.5));
}

TEST_CASE("eval argument errors") {
  auto a = example_a();
  const double r[1] = {1.0};
  const double p[1] = {0.0};
  const double bad[1] = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(a.eval(1, {0, 0}, {0, 0}, r, p), std::out_of_range);
  CHECK_THROWS_AS(a.eval(-1, {0, 0}, {0, 0}, r, p), std::out_of_range);
  CHECK_THROWS_AS(a.eval(0, {0, 0}, {0, 0}, bad, p), std::domain_error);
  CHECK_THROWS_AS(a.eval(0, {0, 0}, {std::numeric_limits<double>::infinity(), 0}, r, p), std::domain_error);
}

TEST_CASE("y is reduced modulo 1, exactly") {
  auto a = example_a();
  // dyadic y so that y + k is representable
  for (double y : {0.0, 0.125, 0.3671875, 0.90625}) {
    for (int k : {-3, -1, 1, 2, 7}) CHECK(eval1(a, y + k, 0.7, -1.3) == eval1(a, y, 0.7, -1.3));
  }
  CHECK(check_periodicity(a, 500, 3, 4.0).passed);
  auto eik = system_from_json(json::parse(
      R"J({"M": 1, "N": 2, "components": [{"kind": "eikonal_coupled", "speed": "2+sin(2*pi*y1)*cos(2*pi*y2)", "F": "r1", "delta": 1}]})J"));
  CHECK(check_periodicity(eik, 500, 4, 4.0).passed);
}

TEST_CASE("weakly coupled column convention") {
  // c = [[1, -0.5], [-1, 2]]: H_1 = |p| + c11 r1 + c21 r2, H_2 = |p| + c12 r1 + c22 r2
  auto s = system_from_json(json::parse(R"J({
    "M": 2, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}, {"kind": "weakly_coupled", "G": "abs(p)"}],
    "coupling": [[1, -0.5], [-1, 2]]})J"));
  const double r[2] = {2.0, 3.0};
  const double p[1] = {0.5};
  CHECK(s.eval(0, {0, 0}, {0, 0}, r, p) == doctest::Approx(0.5 + 2.0 - 3.0));
  CHECK(s.eval(1, {0, 0}, {0, 0}, r, p) == doctest::Approx(0.5 - 1.0 + 6.0));
}

TEST_CASE("check_A3") {
  auto mono = system_from_json(json::parse(R"J({"M": 1, "components": [{"kind": "custom", "H": "abs(p)+r"}]})J"));
  auto rep = check_A3(mono, 500, 1, 3.0);
  CHECK(rep.passed);
  CHECK(rep.violation_count == 0);

  auto exp_sys = custom2("exp(r1-r2)+2*r1-r2+abs(p)", "exp(r2-r1)+2*r2-r1+abs(p)");
  auto rep2 = check_A3(exp_sys, 500, 2, 2.0);
  CHECK(rep2.passed);
  CHECK(rep2.samples > 0);

  auto bad = custom2("-r1+abs(p)", "r2+abs(p)");
  auto rep3 = check_A3(bad, 500, 3, 2.0);
  CHECK_FALSE(rep3.passed);
  CHECK(rep3.violation_count > 0);
  CHECK_FALSE(rep3.witnesses.empty());
}

TEST_CASE("check_A1_coefficients") {
  CHECK(check_A1_coefficients(CouplingMatrix::constants({{1, -1}, {-1, 1}}), 100, 1).passed);
  CHECK_FALSE(check_A1_coefficients(CouplingMatrix::constants({{1, 0}, {1, 1}}), 100, 1).passed);
  CouplingMatrix a(1, 1, {Coefficient::expression("2+cos(2*pi*y)")});
  CHECK(check_A1_coefficients(a, 200, 1).passed);
  // negative column sum
  CHECK_FALSE(check_A1_coefficients(CouplingMatrix::constants({{1, -2}, {-2, 1}}), 100, 1).passed);
}

TEST_CASE("A1 implies A3 on the same budget") {
  auto s = system_from_json(json::parse(R"J({
    "M": 2, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}, {"kind": "weakly_coupled", "G": "abs(p)"}],
    "coupling": [["2+cos(2*pi*y)", "-(1+sin(2*pi*y))/2"], ["-1", "1.5+0.5*sin(2*pi*y)"]]})J"));
  REQUIRE(check_A1_coefficients(*s.coupling(), 1000, 9).passed);
  auto rep = check_A3(s, 1000, 9, 4.0);
  CHECK(rep.passed);
  CHECK(rep.violation_count == 0);
}

TEST_CASE("estimate_lip_p brackets") {
  auto abs_p = system_from_json(json::parse(R"J({"M": 1, "components": [{"kind": "custom", "H": "abs(p)"}]})J"));
  double v = estimate_lip_p(abs_p, 0, 4.0, 64);
  CHECK(v >= 1.0);
  CHECK(v <= 1.1 + 1e-12);
  auto two = system_from_json(
      json::parse(R"J({"M": 1, "components": [{"kind": "eikonal_coupled", "speed": 2, "delta": 2}]})J"));
  v = estimate_lip_p(two, 0, 4.0, 64);
  CHECK(v >= 2.0);
  CHECK(v <= 2.2 + 1e-12);
  auto osc = system_from_json(json::parse(
      R"J({"M": 1, "components": [{"kind": "eikonal_coupled", "speed": "2+cos(2*pi*y)", "delta": 1}]})J"));
  v = estimate_lip_p(osc, 0, 4.0, 64);
  CHECK(v >= 3.0);
  CHECK(v <= 3.3 + 1e-12);
  CHECK(check_lip_p_bound(osc, 500, 5, 4.0).passed);

  auto lr = estimate_lip_r(example_a(), 0, 2.0, 64);
  CHECK(lr >= 3.0);
  CHECK(lr <= 3.3 + 1e-12);
}

TEST_CASE("eikonal coercivity probe") {
  auto s = system_from_json(json::parse(
      R"J({"M": 1, "components": [{"kind": "eikonal_coupled", "speed": "1.5+sin(2*pi*y)", "F": "sin(r)", "delta": 0.5}]})J"));
  for (double P : {0.5, 2.0, 10.0, 100.0}) {
    for (double y : {0.0, 0.25, 0.75}) {
      for (double r : {-3.0, 0.0, 1.0}) {
        CHECK(eval1(s, y, r, P) >= 0.5 * P - 1.0);
        CHECK(eval1(s, y, r, -P) >= 0.5 * P - 1.0);
      }
    }
  }
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(system_from_json(json::parse(R"J({"components": []})J")), std::invalid_argument);
  CHECK_THROWS_AS(system_from_json(json::parse(R"J({"M": 1, "components": [{"kind": "odd"}]})J")),
                  std::invalid_argument);
  CHECK_THROWS_AS(system_from_json(json::parse(R"J({"M": 1, "components": [{"kind": "custom", "H": "abs(q)"}]})J")),
                  std::invalid_argument);
  CHECK_THROWS_AS(system_from_json(json::parse(
                      R"J({"M": 1, "components": [{"kind": "eikonal_coupled", "speed": 1, "delta": 0}]})J")),
                  std::invalid_argument);
  CHECK_THROWS_AS(system_from_json(json::parse(
                      R"J({"M": 2, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}, {"kind": "weakly_coupled", "G": "abs(p)"}], "coupling": [[1, 2]]})J")),
                  std::invalid_argument);
  CHECK_THROWS_AS(system_from_json(json::parse(R"J({"M": 1, "N": 3, "components": [{"kind": "custom", "H": "p"}]})J")),
                  std::invalid_argument);
  CHECK_THROWS(Coefficient::expression("p+1"));
}

TEST_CASE("tabulated coefficient") {
  auto s = system_from_json(json::parse(R"J({
    "M": 1, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}],
    "coupling": [[{"table": [1, 3, 1, 3]}]]})J"));
  CHECK(eval1(s, 0.25, 1.0, 0.0) == doctest::Approx(3.0));
  CHECK(eval1(s, 0.125, 1.0, 0.0) == doctest::Approx(2.0));
  CHECK(eval1(s, 1.25, 1.0, 0.0) == doctest::Approx(3.0));
}

TEST_CASE("declared bounds override sampling") {
  auto s = system_from_json(json::parse(
      R"J({"M": 1, "components": [{"kind": "custom", "H": "abs(p)+r"}], "lip_p": 5, "lip_r": 7})J"));
  CHECK(s.lip_p_bound(3.0) == 5.0);
  CHECK(s.lip_r_bound(3.0) == 7.0);
  CHECK(s.y_independent());
  CHECK(s.x_independent());
  CHECK_FALSE(example_a().y_independent());
}
