#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hjhom/expr.hpp"

using hjhom::Expression;
namespace slot = hjhom::slot;

namespace {
double ev(const char* text, std::array<double, 9> s = {}) { return Expression::parse(text).eval(s); }
}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(ev("1+2*3") == 7.0);
  CHECK(ev("(1+2)*3") == 9.0);
  CHECK(ev("-2*3+1") == -5.0);
  CHECK(ev("8/4/2") == 1.0);
  CHECK(ev("2-3-4") == -5.0);
  CHECK(ev("1.5e1") == 15.0);
}

TEST_CASE("functions and constants") {
  CHECK(ev("abs(-3)") == 3.0);
  CHECK(ev("min(2, -1)") == -1.0);
  CHECK(ev("max(2, -1)") == 2.0);
  CHECK(ev("cos(0)") == 1.0);
  CHECK(ev("exp(0)") == 1.0);
  CHECK(ev("pi") == doctest::Approx(std::numbers::pi));
  CHECK(ev("sin(pi/2)") == doctest::Approx(1.0));
  CHECK(ev("e") == doctest::Approx(std::numbers::e));
}

TEST_CASE("variables map to slots") {
  std::array<double, 9> s{};
  s[slot::x1] = 0.25;
  s[slot::y1] = 0.5;
  s[slot::p1] = -2.0;
  s[slot::r1] = 3.0;
  s[slot::r1 + 1] = 4.0;
  CHECK(ev("x", s) == 0.25);
  CHECK(ev("y1", s) == 0.5);
  CHECK(ev("abs(p)", s) == 2.0);
  CHECK(ev("r1+r2", s) == 7.0);
  CHECK(ev("2+cos(2*pi*y)", s) == doctest::Approx(1.0));

  const auto e = Expression::parse("abs(p1)+r2*y2");
  CHECK(e.uses(slot::p1));
  CHECK(e.uses(slot::y2));
  CHECK_FALSE(e.uses(slot::x1));
  CHECK(e.slots_required() == slot::r1 + 2);
  CHECK(Expression::parse("2*pi").is_constant());
}

TEST_CASE("syntax errors") {
  CHECK_THROWS_AS(Expression::parse("1+"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("foo(1)"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("z"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("(1"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("min(1)"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse(""), std::invalid_argument);
}
