#include "doctest.h"

#include <cmath>
#include <sstream>

#include "pinnopt/error.hpp"
#include "pinnopt/pwl_approx.hpp"
#include "pinnopt/random.hpp"

using namespace pinnopt;

namespace {

double tanh_ref(double x) { return std::tanh(x); }

/// Largest gap between tanh and a chord of slope m through (x0, y0), at the
/// point where sech^2 equals the slope.
double tangency_gap(double m, double x0, double y0) {
  const double x = std::acosh(1.0 / std::sqrt(m));
  return std::abs(std::tanh(x) - (y0 + m * (x - x0)));
}

}  // namespace

TEST_CASE("3- and 5-piece tables") {
  const PwlFunction p3 = tanh_pwl(3);
  CHECK(p3.segment_count() == 3);
  CHECK(std::vector<double>(p3.breakpoints().begin(), p3.breakpoints().end()) == std::vector<double>{-4, -1, 1, 4});
  CHECK(std::vector<double>(p3.values().begin(), p3.values().end()) == std::vector<double>{-1, -0.76, 0.76, 1});
  const PwlFunction p5 = tanh_pwl(5);
  CHECK(std::vector<double>(p5.breakpoints().begin(), p5.breakpoints().end()) ==
        std::vector<double>{-4, -2, -1, 1, 2, 4});
  CHECK(std::vector<double>(p5.values().begin(), p5.values().end()) ==
        std::vector<double>{-1.002, -0.96, -0.76, 0.76, 0.96, 1.002});
  CHECK(p5.min_value() == -1.002);
  CHECK(p5.max_value() == 1.002);
  CHECK(&tanh_pwl_ref(5) == &tanh_pwl_ref(5));
  CHECK(tanh_pwl_ref(3) == p3);
}

TEST_CASE("unsupported piece counts are rejected") {
  for (int p : {0, 1, 2, 4, 6}) CHECK_THROWS_AS(tanh_pwl(p), ContractError);
}

TEST_CASE("evaluation interpolates, clamps and matches hand values") {
  const PwlFunction& p3 = tanh_pwl_ref(3);
  CHECK(p3(0.0) == doctest::Approx(0.0));
  CHECK(p3(0.5) == doctest::Approx(0.38));
  CHECK(p3(2.5) == doctest::Approx(0.88));
  CHECK(p3(-4.0) == -1.0);
  CHECK(p3(10.0) == 1.0);
  CHECK(p3(-10.0) == -1.0);
  CHECK(p3.slope(0.0) == doctest::Approx(0.76));
  CHECK(p3.slope(3.0) == doctest::Approx(0.08));
  CHECK(p3.slope(5.0) == 0.0);
  const PwlFunction& p5 = tanh_pwl_ref(5);
  CHECK(p5(1.5) == doctest::Approx(0.86));
  CHECK(p5(3.0) == doctest::Approx(0.981));
}

TEST_CASE("pieces are odd, monotone and continuous") {
  rng::Engine e(3);
  for (int pieces : {3, 5}) {
    const PwlFunction& f = tanh_pwl_ref(pieces);
    for (int i = 0; i < 2000; ++i) {
      const double x = rng::uniform(e, -6.0, 6.0), d = rng::uniform(e, 0.0, 1.0);
      CHECK(f(-x) == doctest::Approx(-f(x)).epsilon(1e-12));
      CHECK(f(x + d) >= f(x));
    }
    for (double b : f.breakpoints()) CHECK(std::abs(f(b - 1e-12) - f(b + 1e-12)) < 1e-9);
  }
}

TEST_CASE("maximum error against tanh matches the tangency oracle") {
  // 3-piece: the outer chord (slope 0.08 through (1, 0.76)) dominates.
  const double e3 = tangency_gap(0.08, 1.0, 0.76);
  // 5-piece: the inner chord (slope 0.76 through the origin) dominates.
  const double e5 = tangency_gap(0.76, 0.0, 0.0);
  CHECK(e3 == doctest::Approx(0.1240).epsilon(0.01));
  CHECK(e5 == doctest::Approx(0.0826).epsilon(0.01));
  const double m3 = pwl_max_error(tanh_pwl_ref(3), tanh_ref, -4.0, 4.0, 100000);
  const double m5 = pwl_max_error(tanh_pwl_ref(5), tanh_ref, -4.0, 4.0, 100000);
  CHECK(std::abs(m3 - e3) < 1e-6);
  CHECK(std::abs(m5 - e5) < 1e-6);
  CHECK(m5 < m3);
  CHECK_THROWS_AS(pwl_max_error(tanh_pwl_ref(3), tanh_ref, -4.0, 4.0, 999), ContractError);
  CHECK_THROWS_AS(pwl_max_error(tanh_pwl_ref(3), tanh_ref, 1.0, 1.0, 1000), ContractError);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(PwlFunction({0, 1}, {0}), ContractError);
  CHECK_THROWS_AS(PwlFunction({0}, {0}), ContractError);
  CHECK_THROWS_AS(PwlFunction({0, 0}, {0, 1}), ContractError);
  CHECK_THROWS_AS(PwlFunction({1, 0}, {0, 1}), ContractError);
  CHECK_THROWS_AS(PwlFunction({0, NAN}, {0, 1}), ContractError);
}

TEST_CASE("CSV round trip is exact") {
  for (int pieces : {3, 5}) {
    std::stringstream s;
    write_pwl_csv(tanh_pwl_ref(pieces), s);
    CHECK(s.str().rfind("breakpoint,value\n", 0) == 0);
    CHECK(read_pwl_csv(s) == tanh_pwl_ref(pieces));
  }
  std::istringstream bad_header("x,y\n0,0\n1,1\n");
  CHECK_THROWS_AS(read_pwl_csv(bad_header), ParseError);
  std::istringstream bad_row("breakpoint,value\n0,0,0\n");
  CHECK_THROWS_AS(read_pwl_csv(bad_row), ParseError);
}
