#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "hjhom/evolve.hpp"

using namespace hjhom;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const HamiltonianSystem> make(const char* text) {
  return std::make_shared<const HamiltonianSystem>(system_from_json(json::parse(text)));
}

EvolutionProblem oscillating(std::shared_ptr<const HamiltonianSystem> sys, double eps, GridField u0, double T) {
  EvolutionProblem p;
  p.source = OscillatingSource{std::move(sys), eps};
  p.u0 = std::move(u0);
  p.T = T;
  return p;
}

GridField constant(const TorusGrid& g, int m, double c) {
  return sample(g, m, [c](int, const Point&) { return c; });
}

const char* kAbsP = R"J({"M": 1, "components": [{"kind": "custom", "H": "abs(p)"}]})J";
const char* kDecay = R"J({"M": 1, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}], "coupling": [[1]]})J";
const char* kConstCoupling = R"J({"M": 2, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}, {"kind": "weakly_coupled", "G": "abs(p)"}],
                                   "coupling": [[1, -1], [-1, 1]]})J";
const char* kExampleB = R"J({"M": 2, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}, {"kind": "weakly_coupled", "G": "abs(p)"}],
    "coupling": [["2+cos(2*pi*y)", "-(1+sin(2*pi*y))/2"], ["-1", "1.5+0.5*sin(2*pi*y)"]]})J";

}  // namespace

TEST_CASE("constant data is stationary for H = |p|") {
  auto prob = oscillating(make(kAbsP), 1.0, constant(TorusGrid(1, 64), 1, 0.7), 0.5);
  auto res = solve(prob);
  for (double v : res.final.values()) CHECK(v == 0.7);
  CHECK(res.diagnostics.steps > 0);
  CHECK(res.diagnostics.linfini_ok);
}

TEST_CASE("zero data with H(x, y, 0, 0) = 0 stays zero") {
  auto prob = oscillating(make(kExampleB), 0.25, constant(TorusGrid(1, 128), 2, 0.0), 0.3);
  auto res = solve(prob);
  CHECK(sup_norm(res.final) == 0.0);
}

TEST_CASE("decay u' = -u against the Euler product") {
  auto sys = make(kDecay);
  auto prob = oscillating(sys, 1.0, constant(TorusGrid(1, 32), 1, 1.0), 1.0);

  // fixed dt by hand
  GridField u = prob.u0;
  const double dt = 0.005;
  for (int k = 0; k < 200; ++k) u = step(prob, u, dt);
  for (double v : u.values()) CHECK(v == doctest::Approx(std::pow(1.0 - dt, 200)).epsilon(1e-12));

  auto res = solve(prob);
  const auto& d = res.diagnostics;
  CHECK(std::abs(res.final[0] - std::exp(-1.0)) <= d.dt_max);
  if (d.dt_min == d.dt_max) {
    CHECK(res.final[0] == doctest::Approx(std::pow(1.0 - d.dt_max, static_cast<double>(d.steps))).epsilon(1e-12));
  }
  // dt lambda_r <= 1/2
  CHECK(d.dt_max * d.lambda_r_max <= 0.5 + 1e-12);
}

TEST_CASE("step is order preserving under the dt contract") {
  auto sys = make(kExampleB);
  TorusGrid g(1, 128);
  auto prob = oscillating(sys, 0.25, constant(g, 2, 0.0), 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1), gap(0, 0.3);
  for (int trial = 0; trial < 5; ++trial) {
    GridField v(g, 2), w(g, 2);
    const double a = u(rng), b = u(rng);
    for (std::size_t k = 0; k < v.values().size(); ++k) {
      const double x = g.node(k % g.size())[0];
      v.values()[k] = a * std::sin(2 * kPi * x) + 0.2 * u(rng);
      w.values()[k] = v.values()[k] + gap(rng) * (trial % 2) + b * 0.0;
    }
    auto bv = step_bounds(prob, v), bw = step_bounds(prob, w);
    StepBounds shared{std::max(bv.theta, bw.theta), std::max(bv.lambda_r, bw.lambda_r), std::max(bv.radius, bw.radius)};
    const double dt = shared.max_dt(prob.cfl, g.h(), 1);
    auto sv = step(prob, v, dt, shared);
    auto sw = step(prob, w, dt, shared);
    for (std::size_t k = 0; k < sv.values().size(); ++k) CHECK(sv.values()[k] <= sw.values()[k] + 1e-14);
  }
}

TEST_CASE("CFL violations are refused") {
  auto prob = oscillating(make(kDecay), 1.0, sample(TorusGrid(1, 32), [](const Point& x) { return std::sin(2 * kPi * x[0]); }), 1.0);
  auto b = step_bounds(prob, prob.u0);
  const double limit = b.max_dt(prob.cfl, prob.grid().h(), 1);
  CHECK_NOTHROW(step(prob, prob.u0, limit));
  CHECK_THROWS_AS(step(prob, prob.u0, 2 * limit), CflError);
}

TEST_CASE("problem validation") {
  auto sys = make(kDecay);
  auto u0 = constant(TorusGrid(1, 320), 1, 0.0);
  CHECK_THROWS_AS(oscillating(sys, 0.3, u0, 1.0).validate(), std::invalid_argument);    // L/eps not integer
  CHECK_THROWS_AS(oscillating(sys, 0.05, u0, 1.0).validate(), std::invalid_argument);   // h > eps/32
  CHECK_NOTHROW(oscillating(sys, 0.1, u0, 1.0).validate());
  CHECK_THROWS_AS(oscillating(sys, 0.1, u0, 0.0).validate(), std::invalid_argument);
  auto p = oscillating(sys, 0.1, u0, 1.0);
  p.cfl = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.cfl = 0.5;
  p.snapshots = {1.5};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(oscillating(sys, 0.1, constant(TorusGrid(1, 320), 2, 0.0), 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(solve(oscillating(sys, 0.3, u0, 1.0)), std::invalid_argument);
}

TEST_CASE("a-priori sup bound, constant coupling") {
  TorusGrid g(1, 64);
  auto u0 = sample(g, 2, [](int c, const Point& x) { return c == 0 ? std::sin(2 * kPi * x[0]) : std::cos(2 * kPi * x[0]); });
  auto res = solve(oscillating(make(kConstCoupling), 1.0, u0, 1.0));
  const auto& d = res.diagnostics;
  CHECK(d.sup_u0 <= 1.0);
  CHECK(d.c_bound > 0.0);
  CHECK(d.linfini_ok);
  CHECK(d.max_abs_u <= 1.0 + d.c_bound * 1.0 + 1e-6);
  // |H_i(x, y, r, 0)| <= |r1 - r2| <= 2 on |r| <= 1
  CHECK(d.c_bound <= 2.0 + 1e-12);
}

TEST_CASE("snapshots are hit exactly") {
  auto prob = oscillating(make(kExampleB), 0.25, constant(TorusGrid(1, 128), 2, 0.0), 0.3);
  prob.u0 = sample(prob.grid(), 2, [](int c, const Point& x) { return std::sin(2 * kPi * x[0] + c); });
  prob.snapshots = {0.1, 0.2};
  auto res = solve(prob);
  REQUIRE(res.snapshots.size() == 2);
  CHECK(res.snapshots[0].t == 0.1);
  CHECK(res.snapshots[1].t == 0.2);
  CHECK(res.diagnostics.dt_min <= res.diagnostics.dt_max);
  CHECK(res.diagnostics.to_json().contains("steps"));
}

TEST_CASE("homogenized |p| self-convergence") {
  auto provider = std::make_shared<const YIndependentProvider>(make(kAbsP));
  auto run = [&](int n) {
    EvolutionProblem p;
    p.source = HomogenizedSource{provider};
    p.u0 = sample(TorusGrid(1, n), [](const Point& x) { return std::sin(2 * kPi * x[0]); });
    p.T = 0.3;
    return solve(p).final;
  };
  const auto coarse = run(64);
  const auto fine = run(256);
  const double h = 1.0 / 64;
  const double err = sup_diff(restrict_to(fine, coarse.grid()), coarse);
  CHECK(err <= 5 * std::sqrt(h) * (1 + 0.3));
  // exact solution: min of u0 over |y - x| <= T
  auto exact = sample(coarse.grid(), [](const Point& x) {
    double m = 1.0;
    for (int k = 0; k <= 6000; ++k) m = std::min(m, std::sin(2 * kPi * (x[0] - 0.3 + 0.6 * k / 6000.0)));
    return m;
  });
  const double e_coarse = sup_diff(coarse, exact);
  const double e_fine = sup_diff(restrict_to(fine, coarse.grid()), exact);
  CHECK(e_coarse <= 5 * std::sqrt(h) * (1 + 0.3));
  CHECK(e_fine < e_coarse);
}

TEST_CASE("y-independent: oscillating and table-backed homogenized runs agree") {
  auto sys = make(R"J({"M": 1, "components": [{"kind": "custom", "H": "(1+0.5*sin(2*pi*x))*abs(p)+r"}]})J");
  auto table = std::make_shared<const HBarTable>(
      build_table(sys, {0}, parse_axes("x1:0:1:17,r1:-1:1:9,p1:-6:6:25", 1, 1), CellParams{}, 0));
  const int n = 128;
  const double T = 0.25;
  auto u0 = sample(TorusGrid(1, n), [](const Point& x) { return 0.5 * std::sin(2 * kPi * x[0]); });
  auto osc = solve(oscillating(sys, 0.25, u0, T));
  EvolutionProblem hom;
  hom.source = HomogenizedSource{std::make_shared<const TableProvider>(table)};
  hom.u0 = u0;
  hom.T = T;
  auto h = solve(hom);
  CHECK(sup_diff(osc.final, h.final) <= 5 * std::sqrt(1.0 / n) * (1 + T));
}

TEST_CASE("out-of-hull table queries propagate") {
  auto axes = parse_axes("r1:-1:1:2,p1:-1:1:2", 1, 1);
  auto table = std::make_shared<const HBarTable>(1, 1, axes, std::vector<int>{0}, std::vector<double>{-1.0, 1.0, 1.0, 3.0});
  EvolutionProblem p;
  p.source = HomogenizedSource{std::make_shared<const TableProvider>(table)};
  p.u0 = sample(TorusGrid(1, 64), [](const Point& x) { return 0.5 * std::sin(2 * kPi * x[0]); });
  p.T = 0.1;
  CHECK_THROWS_AS(solve(p), OutOfHullError);
}

TEST_CASE("comparison check") {
  auto sys = make(kExampleB);
  TorusGrid g(1, 128);
  auto prob = oscillating(sys, 0.25, constant(g, 2, 0.0), 0.4);
  auto base = sample(g, 2, [](int c, const Point& x) { return std::sin(2 * kPi * x[0]) * (1 - 0.5 * c); });

  auto same = check_comparison(prob, base, base, 0.4);
  CHECK(same.passed);
  CHECK(same.worst_margin >= 0.0);
  CHECK(same.worst_margin <= 1e-6);

  auto higher = sample(g, 2, [&](int c, const Point& x) { return base.at(c, g.flat(static_cast<int>(std::lround(x[0] * 128)))) + 0.2 + 0.1 * std::cos(2 * kPi * x[0]); });
  CHECK(check_comparison(prob, base, higher, 0.4).passed);

  auto crossing = sample(g, 2, [&](int c, const Point& x) { return base.at(c, g.flat(static_cast<int>(std::lround(x[0] * 128)))) + 0.3 * std::sin(4 * kPi * x[0]); });
  auto rep = check_comparison(prob, crossing, base, 0.4);
  CHECK(rep.passed);
  CHECK(rep.details.at("rhs").get<double>() == doctest::Approx(0.3).epsilon(1e-3));

  CHECK_FALSE(check_comparison(prob, base, constant(TorusGrid(1, 256), 2, 0.0), 0.4).passed);
}

TEST_CASE("slope persistence bound for the oscillating eikonal family") {
  auto sys = make(R"J({"M": 1, "components": [{"kind": "weakly_coupled", "G": "abs(p)"}], "coupling": [["2+cos(2*pi*y)"]]})J");
  for (double eps : {0.25, 0.125}) {
    const int n = static_cast<int>(32 / eps);
    auto prob = oscillating(sys, eps, sample(TorusGrid(1, n), [](const Point& x) { return std::sin(2 * kPi * x[0]); }), 0.5);
    auto bound = slope_bound(prob);
    auto res = solve(prob);
    CHECK(bound.c_lip > 0.0);
    CHECK(res.diagnostics.final_slope <= bound.radius);
  }
}

TEST_CASE("coercivity radius and sampled sup") {
  auto prob = oscillating(make(kAbsP), 1.0, constant(TorusGrid(1, 32), 1, 0.0), 1.0);
  CHECK(sampled_sup_h(prob, 1.0, 0.0) == 0.0);
  CHECK(sampled_sup_h(prob, 1.0, 2.0) == doctest::Approx(2.0));
  const double L = coercivity_radius(prob, 3.0, 1.0);
  CHECK(L > 3.0);
  CHECK(L <= 3.0 * 1.01 + 1e-9);
}

TEST_CASE("initial data expressions") {
  TorusGrid g(2, 8);
  auto f = sample_expressions(g, {Expression::parse("x1+2*x2"), Expression::parse("cos(2*pi*x)")});
  CHECK(f.components() == 2);
  CHECK(f.at(0, g.flat(1, 2)) == doctest::Approx(0.125 + 0.5));
  CHECK(f.at(1, g.flat(2, 0)) == doctest::Approx(0.0).epsilon(1e-12).scale(1));
  CHECK_THROWS_AS(sample_expressions(g, {Expression::parse("y")}), std::invalid_argument);
  CHECK_THROWS_AS(sample_expressions(g, {Expression::parse("p+1")}), std::invalid_argument);
  CHECK_THROWS_AS(sample_expressions(g, {Expression::parse("r")}), std::invalid_argument);
}

TEST_CASE("two-dimensional oscillating run") {
  auto sys = make(R"J({"M": 1, "N": 2, "components": [{"kind": "eikonal_coupled", "speed": "1.5+0.5*sin(2*pi*y1)*cos(2*pi*y2)", "F": "r1", "delta": 1}]})J");
  TorusGrid g(2, 64);
  auto u0 = sample(g, [](const Point& x) { return 0.5 * std::sin(2 * kPi * x[0]) * std::cos(2 * kPi * x[1]); });
  auto res = solve(oscillating(sys, 0.5, u0, 0.1));
  CHECK(res.diagnostics.linfini_ok);
  CHECK(res.final.all_finite());
}
