#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hjhom/grid.hpp"

using namespace hjhom;
constexpr double kPi = std::numbers::pi;

TEST_CASE("torus grid geometry") {
  TorusGrid g(1, 8, 2.0);
  CHECK(g.h() == 0.25);
  CHECK(g.size() == 8);
  CHECK(g.coord(3) == 0.75);
  CHECK(g.neighbor(0, 0, -1) == 7);
  CHECK(g.neighbor(7, 0, 1) == 0);

  TorusGrid g2(2, 4);
  CHECK(g2.size() == 16);
  const auto k = g2.flat(1, 3);
  CHECK(g2.index(k)[0] == 1);
  CHECK(g2.index(k)[1] == 3);
  CHECK(g2.node(k)[0] == 0.25);
  CHECK(g2.node(k)[1] == 0.75);
  CHECK(g2.index(g2.neighbor(k, 1, 1))[1] == 0);
  CHECK_THROWS(TorusGrid(3, 8));
  CHECK_THROWS(TorusGrid(1, 3));
}

TEST_CASE("sample") {
  TorusGrid g(1, 4);
  auto zero = sample(g, [](const Point&) { return 0.0; });
  CHECK(sup_norm(zero) == 0.0);
  auto s = sample(g, [](const Point& x) { return std::sin(2 * kPi * x[0]); });
  CHECK(std::abs(s[0]) < 1e-15);
  CHECK(s[1] == doctest::Approx(1.0));
  CHECK(std::abs(s[2]) < 1e-15);
  CHECK(s[3] == doctest::Approx(-1.0));
  auto lin = sample(g, [](const Point& x) { return x[0]; });
  CHECK(lin[0] == 0.0);
  CHECK(lin[1] == 0.25);
  CHECK(lin[2] == 0.5);
  CHECK(lin[3] == 0.75);
  CHECK_THROWS_AS(sample(g, [](const Point&) { return std::nan(""); }), std::domain_error);
}

TEST_CASE("upwind differences") {
  TorusGrid g(1, 256);
  auto c = sample(g, [](const Point&) { return 4.0; });
  auto [dmc, dpc] = upwind_diffs(c, 0);
  CHECK(sup_norm(dmc) == 0.0);
  CHECK(sup_norm(dpc) == 0.0);

  // forward difference of sin(2 pi y) equals 2 pi cos(2 pi (y + h/2)) * sinc factor
  auto s = sample(g, [](const Point& x) { return std::sin(2 * kPi * x[0]); });
  auto [dm, dp] = upwind_diffs(s, 0);
  const double h = g.h();
  double worst = 0.0;
  for (int k = 0; k < g.n(); ++k) {
    const double y = g.coord(k);
    worst = std::max(worst, std::abs(dp[k] - 2 * kPi * std::cos(2 * kPi * y + kPi * h)));
    CHECK(dm[(k + 1) % g.n()] == doctest::Approx(dp[k]).epsilon(1e-14));
  }
  // |sin(pi h)/(pi h) - 1| * 2 pi <= (2 pi) (pi h)^2 / 6
  CHECK(worst <= 2 * kPi * (kPi * h) * (kPi * h) / 6 + 1e-12);

  // index ramp: the wraparound column carries the compensating slope
  TorusGrid g8(1, 8);
  GridField ramp(g8, 1);
  for (int k = 0; k < 8; ++k) ramp[k] = k;
  auto [rm, rp] = upwind_diffs(ramp, 0);
  double total = 0.0;
  for (int k = 0; k < 8; ++k) total += rp[k] * g8.h();
  CHECK(std::abs(total) < 1e-12);
  CHECK(rp[7] == doctest::Approx(-7.0 / g8.h()));
  CHECK(rm[0] == doctest::Approx(-7.0 / g8.h()));
}

TEST_CASE("summation by parts in 2-D, per component") {
  TorusGrid g(2, 16, 2.0);
  auto f = sample(g, 2, [](int c, const Point& x) {
    return std::sin(kPi * x[0]) * (c + 1) + std::cos(3 * kPi * x[1]) + x[0] * x[1];
  });
  for (int axis = 0; axis < 2; ++axis) {
    auto [dm, dp] = upwind_diffs(f, axis);
    for (int c = 0; c < 2; ++c) {
      double total = 0.0;
      for (double v : dp.component(c)) total += v * g.h();
      CHECK(std::abs(total) <= 1e-12 * 16 * sup_norm(f));
    }
  }
}

TEST_CASE("norms") {
  TorusGrid g(1, 4);
  GridField z(g, 1);
  CHECK(sup_norm(z) == 0.0);
  GridField v(g, 1, {1.0, -3.0, 2.0, 0.0});
  CHECK(sup_norm(v) == 3.0);
  CHECK(sup_diff(v, v) == 0.0);
  CHECK(sup_diff(v, z) == 3.0);
  CHECK_THROWS_AS(sup_diff(v, GridField(TorusGrid(1, 8), 1)), std::invalid_argument);
  CHECK_THROWS_AS(sup_diff(v, GridField(g, 2)), std::invalid_argument);
}

TEST_CASE("interpolation") {
  TorusGrid g(1, 4);
  GridField v(g, 1, {1.0, 3.0, 2.0, 0.0});
  CHECK(interpolate(v, {0.25, 0}) == 3.0);
  CHECK(interpolate(v, {0.125, 0}) == doctest::Approx(2.0));
  CHECK(interpolate(v, {0.875, 0}) == doctest::Approx(0.5));  // across the seam
  CHECK(interpolate(v, {1.25, 0}) == doctest::Approx(3.0));   // reduced modulo the cell
  CHECK(interpolate(v, {-0.75, 0}) == doctest::Approx(3.0));

  auto c = sample(TorusGrid(2, 8), [](const Point&) { return 1.5; });
  CHECK(interpolate(c, {0.3, 0.77}) == doctest::Approx(1.5));

  TorusGrid g2(2, 8);
  auto f = sample(g2, [](const Point& x) { return std::sin(2 * kPi * x[0]) * std::cos(2 * kPi * x[1]); });
  for (std::size_t k = 0; k < g2.size(); ++k) CHECK(interpolate(f, g2.node(k)) == f[k]);
  // bilinear reproduces affine data inside a cell
  auto a = sample(g2, [](const Point& x) { return 2 * x[0] - x[1]; });
  CHECK(interpolate(a, {0.3, 0.4}) == doctest::Approx(0.2));
}

TEST_CASE("restriction") {
  TorusGrid fine(1, 8), coarse(1, 4);
  GridField f(fine, 1, {0, 1, 2, 3, 4, 5, 6, 7});
  auto r = restrict_to(f, coarse);
  CHECK(r[0] == 0);
  CHECK(r[1] == 2);
  CHECK(r[2] == 4);
  CHECK(r[3] == 6);
  auto c = restrict_to(sample(fine, [](const Point&) { return 2.0; }), coarse);
  CHECK(sup_norm(c) == 2.0);
  auto fn = [](const Point& x) { return std::cos(2 * kPi * x[0]) + x[0]; };
  CHECK(sup_diff(restrict_to(sample(TorusGrid(1, 64), fn), TorusGrid(1, 16)), sample(TorusGrid(1, 16), fn)) == 0.0);
  CHECK_THROWS_AS(restrict_to(f, TorusGrid(1, 6)), std::invalid_argument);
  CHECK_THROWS_AS(restrict_to(f, TorusGrid(1, 4, 2.0)), std::invalid_argument);
}

TEST_CASE("max upwind slope") {
  TorusGrid g(1, 4);
  GridField v(g, 1, {0.0, 1.0, 0.0, 0.0});
  CHECK(max_upwind_slope(v) == 4.0);
}

TEST_CASE("csv round trip") {
  TorusGrid g(2, 4, 2.0);
  auto f = sample(g, 2, [](int c, const Point& x) { return std::sin(x[0] + 0.1 * c) / 3 + x[1]; });
  std::stringstream ss;
  write_csv(ss, f);
  const std::string text = ss.str();
  CHECK(text.rfind("# grid n=4 N=2 L=2 M=2", 0) == 0);
  auto back = read_csv(ss);
  CHECK(back.grid() == g);
  CHECK(back.components() == 2);
  CHECK(sup_diff(back, f) == 0.0);

  std::stringstream bad("# grid n=4 N=1 L=1 M=1\n0,1\n1,2\n");
  CHECK_THROWS(read_csv(bad));
}
