#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ddshaper/analytic.hpp"
#include "oracles.hpp"

using namespace ddshaper;

namespace {
constexpr double kFAc = 9.746969e6;
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;
}  // namespace

TEST_CASE("minimum frequency increment") {
  const auto inc = min_freq_increment(100e-9, 1e-9);
  CHECK(inc.approx == doctest::Approx(50e3).epsilon(1e-14));
  CHECK(inc.exact == doctest::Approx(5e6 / 101.0).epsilon(1e-14));

  const auto zero = min_freq_increment(100e-9, 0.0);
  CHECK(zero.exact == 0.0);
  CHECK(zero.approx == 0.0);

  // approx/exact -> 1 as t_s/tau -> 0; at t_s/tau = 0.01 within 1.5%
  const auto small = min_freq_increment(100e-9, 1e-9);
  CHECK(std::abs(small.approx / small.exact - 1.0) <= 0.015);
  const auto tiny = min_freq_increment(100e-9, 1e-12);
  CHECK(std::abs(tiny.approx / tiny.exact - 1.0) <= 2e-5);
}

TEST_CASE("filter weight at and near the resonance") {
  const double tau = 51.298e-9;
  for (long n : {192L, 320L, 672L, 10000L}) {
    CHECK(std::abs(filter_weight(1.0 / (2.0 * tau), n, tau) - kTwoOverPi) <=
          1e-9);
    // raw formula slightly off resonance against the extended-precision oracle
    for (double eps : {1e-9, 1e-7, 3e-4}) {
      const double f = (1.0 + eps) / (2.0 * tau);
      const double w = filter_weight(f, n, tau);
      const double ref = static_cast<double>(
          oracles::filter_weight_raw(f, n, static_cast<long double>(tau)));
      CHECK_MESSAGE(std::abs(w / ref - 1.0) <= 1e-6, "N = ", n,
                    ", eps = ", eps);
    }
  }
}

TEST_CASE("filter weight nulls and low-frequency rolloff") {
  const double tau = 51.298e-9;
  // f = 1/tau: sec(pi) = -1 makes the bracket 2, sinc(2 pi N/2...) = 0
  CHECK(filter_weight(1.0 / tau, 320, tau) <= 1e-12);
  // f -> 0: sec -> 1 kills the bracket
  CHECK(filter_weight(1.0, 320, tau) <= 1e-9);
}

TEST_CASE("filter weight: higher odd resonances and the odd-N rejection") {
  const double tau = 51.298e-9;
  // resonance f tau = (2m+1)/2 has the limit 2/((2m+1) pi)
  for (int m : {1, 2}) {
    const double f = (2.0 * m + 1.0) / (2.0 * tau);
    CHECK(std::abs(filter_weight(f, 320, tau) -
                   kTwoOverPi / (2.0 * m + 1.0)) <= 1e-9);
  }
  CHECK_THROWS_AS(filter_weight(1.0 / (2.0 * tau), 321, tau),
                  std::domain_error);
  // odd N away from any resonance is fine
  CHECK_NOTHROW(filter_weight(0.7 / (2.0 * tau), 321, tau));
}

TEST_CASE("filter weight maximum over the first lobe is 2/pi") {
  const double tau = 51.298e-9;
  double best = 0.0;
  for (long i = 0; i <= 4000; ++i) {
    const double f =
        (0.8 + 0.4 * static_cast<double>(i) / 4000.0) / (2.0 * tau);
    best = std::max(best, filter_weight(f, 320, tau));
  }
  CHECK(best <= kTwoOverPi + 1e-9);
  CHECK(best == doctest::Approx(kTwoOverPi).epsilon(1e-6));
}

TEST_CASE("response: trivial limits") {
  SequenceParams seq{672, 51.298e-9, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;

  std::vector<AcSignal> none = {{kFAc, 0.0, std::nullopt}};
  CHECK(response_p(seq, none, sensor) == 1.0);  // J0(0) = 1

  // full decoherence: p -> 1/2
  sensor.t2 = 1e-9;
  std::vector<AcSignal> sig = {{kFAc, 7.15e-6, std::nullopt}};
  CHECK(response_p(seq, sig, sensor) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("response at the resonance matches the frozen reference") {
  // single tone, W = 2/pi, gamma = 2 pi 28e9, B = 7.15 uT, N = 672,
  // tau = 51.298 ns; p = (1 + J0(2/pi gamma B N tau)) / 2
  SequenceParams seq{672, 51.298e-9, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;
  std::vector<AcSignal> sig = {{1.0 / (2.0 * seq.tau), 7.15e-6, std::nullopt}};
  const double p = response_p(seq, sig, sensor);
  CHECK(p == doctest::Approx(0.49152020214908907).epsilon(1e-10));
}

TEST_CASE("response rejects synchronized phases and odd N") {
  SequenceParams seq{672, 51.298e-9, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;
  std::vector<AcSignal> sync = {{kFAc, 1e-6, 0.3}};
  CHECK_THROWS_AS(response_p(seq, sync, sensor), ValidationError);
  seq.n_pulses = 321;
  std::vector<AcSignal> ok = {{kFAc, 1e-6, std::nullopt}};
  CHECK_THROWS_AS(response_p(seq, ok, sensor), ValidationError);
}

TEST_CASE("response is monotone in B below the first Bessel zero") {
  SequenceParams seq{192, 51.298e-9, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;
  double prev = 1.0;
  for (double b = 0.0; b <= 2.0e-6; b += 0.1e-6) {
    std::vector<AcSignal> sig = {{1.0 / (2.0 * seq.tau), b, std::nullopt}};
    const double p = response_p(seq, sig, sensor);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("small-argument linearity of the contrast") {
  // 1 - 2p = (1 - J0(x))/... with x = W gamma B t <= 0.1:
  // 1 - J0(x) = x^2/4 to 0.1%
  SequenceParams seq{192, 51.298e-9, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;
  const double t = seq.total_time();
  const double w = filter_weight(1.0 / (2.0 * seq.tau), seq.n_pulses, seq.tau);
  const double b = 0.1 / (w * sensor.gamma * t);
  std::vector<AcSignal> sig = {{1.0 / (2.0 * seq.tau), b, std::nullopt}};
  const double p = response_p(seq, sig, sensor);
  const double x = w * sensor.gamma * b * t;
  CHECK(std::abs(2.0 * (1.0 - p) / (x * x / 4.0) - 1.0) <= 1e-3);
  CHECK((1.0 - p) * 2.0 ==
        doctest::Approx(x * x / 4.0 - x * x * x * x / 64.0).epsilon(1e-4));
}

TEST_CASE("multi-tone response is the product of J0 factors") {
  SequenceParams seq{672, 51.298e-9, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;
  std::vector<AcSignal> tones = {{kFAc, 0.4e-6, std::nullopt},
                                 {kFAc * 1.001, 0.7e-6, std::nullopt}};
  const double both = response_p(seq, tones, sensor);
  const double t = seq.total_time();
  double expected = 1.0;
  for (const auto& s : tones)
    expected *= bessel_j0(filter_weight(s.f_ac, seq.n_pulses, seq.tau) *
                          sensor.gamma * s.b_ac * t);
  CHECK(both == doctest::Approx(0.5 * (1.0 + expected)).epsilon(1e-12));
}

TEST_CASE("resonant tau and interpolated resolution") {
  CHECK(resonant_tau(kFAc) * 1e9 == doctest::Approx(51.298).epsilon(1e-5));
  CHECK(std::abs(resonant_tau(kFAc) - 51.298e-9) <= 0.0005e-9);

  const double dt = interpolated_resolution(25e-9, 14);
  CHECK(dt == doctest::Approx(1.526e-12).epsilon(1e-3));
  CHECK(dt == 25e-9 / 16384.0);
  CHECK(interpolated_resolution(25e-9, 0) == 25e-9);
}

TEST_CASE("scan_response: deterministic, parallel, off-resonance flat") {
  SequenceParams seq{192, 0.0, 25e-9, PulseShape::CosineSquare};
  SensorModel sensor;
  std::vector<AcSignal> sig = {{kFAc, 0.84e-6, std::nullopt}};
  // away from every f tau = m + 1/2 resonance the weight is tiny, p stays 1
  ScanGrid far{0.35 / kFAc, 1e-12, 32};
  const ScanResult flat = scan_response(seq, far, sig, sensor);
  for (Eigen::Index i = 0; i < flat.p_values.size(); ++i)
    CHECK(flat.p_values[i] >= 0.999);

  ScanGrid grid{51.0e-9, 1e-12, 601};
  const ScanResult a = scan_response(seq, grid, sig, sensor, 1);
  const ScanResult b = scan_response(seq, grid, sig, sensor, 7);
  CHECK((a.p_values == b.p_values).all());  // bitwise order independence
  CHECK(a.metadata["n_points"] == 601);

  // sub-femtosecond steps are representable
  ScanGrid fine{51.298e-9, 1e-16, 11};
  const ScanResult f = scan_response(seq, fine, sig, sensor);
  CHECK(f.tau_values[10] - f.tau_values[0] ==
        doctest::Approx(1e-15).epsilon(1e-6));
}
