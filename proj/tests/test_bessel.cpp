#include <doctest.h>

#include <cmath>

#include "ddshaper/analytic.hpp"
#include "reference_j0.hpp"

using ddshaper::bessel_j0;

TEST_CASE("J0 against the high-precision reference table") {
  for (const auto& entry : testdata::kJ0Reference) {
    CHECK_MESSAGE(std::abs(bessel_j0(entry.x) - entry.j0) <= 1e-10,
                  "x = ", entry.x);
  }
}

TEST_CASE("J0 basics") {
  CHECK(bessel_j0(0.0) == 1.0);
  CHECK(std::abs(bessel_j0(2.404825557695773)) <= 1e-10);  // first zero
  CHECK_THROWS(bessel_j0(std::nan("")));
  CHECK_THROWS(bessel_j0(INFINITY));
}

TEST_CASE("J0 is even") {
  for (double x = 0.125; x < 80.0; x *= 1.7)
    CHECK(bessel_j0(-x) == bessel_j0(x));
}

TEST_CASE("J0 series/asymptotic switch is seamless") {
  // both branches evaluated just around the switch at |x| = 12
  const double lo = bessel_j0(11.9999999);
  const double hi = bessel_j0(12.0000001);
  CHECK(std::abs(hi - lo) <= 1e-7);  // J0' ~ 0.22 here, df = 0.22 * 2e-7
  CHECK(std::abs(bessel_j0(12.0) - 0.04768931079683354) <= 1e-12);
}

TEST_CASE("J0 bounded by 1") {
  for (const auto& entry : testdata::kJ0Reference)
    CHECK(std::abs(bessel_j0(entry.x)) <= 1.0);
}
