#include <cmath>

#include "ddshaper/analytic.hpp"

namespace ddshaper {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279503L;

// J0(x) = sum_k (-1)^k (x^2/4)^k / (k!)^2. Extended precision absorbs the
// cancellation, which peaks around (x/2)^(2k)/(k!)^2 ~ 4e3 at the switch point.
long double j0_series(long double x) {
  const long double q = x * x / 4.0L;
  long double term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * static_cast<long double>(k));
    sum += term;
    if (fabsl(term) < 1e-25L * fabsl(sum) + 1e-30L) break;
  }
  return sum;
}

// Hankel expansion J0(x) ~ sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)]
// with P = 1 - u2 + u4 - ..., Q = -u1 + u3 - ...,
// u_m = prod_{j=1..m} (2j-1)^2 / (8^m m! x^m). Truncated at the smallest
// term; at the x >= 12 switch point that term is ~4e-11.
long double j0_asymptotic(long double x) {
  long double p = 1.0L, q = 0.0L;
  long double u = 1.0L, prev = 1e30L;
  int sign_p = -1, sign_q = -1;
  for (int m = 1; m <= 60; ++m) {
    const long double odd = 2.0L * m - 1.0L;
    u *= odd * odd / (8.0L * static_cast<long double>(m) * x);
    if (u >= prev) break;
    prev = u;
    if (m % 2 == 1) {
      q += sign_q * u;
      sign_q = -sign_q;
    } else {
      p += sign_p * u;
      sign_p = -sign_p;
    }
    if (u < 1e-22L) break;
  }
  const long double w = x - kPiL / 4.0L;
  return sqrtl(2.0L / (kPiL * x)) * (p * cosl(w) - q * sinl(w));
}

}  // namespace

double bessel_j0(double x) {
  if (!std::isfinite(x)) throw ValidationError("x", "must be finite");
  const long double ax = fabsl(static_cast<long double>(x));
  if (ax <= 12.0L) return static_cast<double>(j0_series(ax));
  return static_cast<double>(j0_asymptotic(ax));
}

}  // namespace ddshaper
