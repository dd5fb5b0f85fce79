#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ddshaper/harness.hpp"
#include "ddshaper/scan_io.hpp"

using namespace ddshaper;
namespace fs = std::filesystem;

namespace {

ScanResult synthetic_dip(double center, double width, double depth,
                         double start, double step, long n) {
  ScanResult scan;
  scan.tau_values.resize(n);
  scan.p_values.resize(n);
  for (long i = 0; i < n; ++i) {
    const double tau = start + static_cast<double>(i) * step;
    const double z = (tau - center) / width;
    scan.tau_values[i] = tau;
    scan.p_values[i] = 1.0 - depth * std::exp(-z * z);
  }
  return scan;
}

}  // namespace

TEST_CASE("find_resonance: symmetric synthetic dip is located exactly") {
  const double center = 51.2981e-9;
  const ScanResult scan =
      synthetic_dip(center, 0.2e-9, 0.6, 50.8e-9, 1e-12, 1001);
  const Resonance r = find_resonance(scan);
  CHECK(std::abs(r.tau_min - center) <= 1e-15);
  CHECK(r.p_min == doctest::Approx(0.4).epsilon(1e-4));
  // FWHM of a gaussian dip: 2 sqrt(ln 2) width
  CHECK(r.linewidth ==
        doctest::Approx(2.0 * std::sqrt(std::log(2.0)) * 0.2e-9).epsilon(1e-3));
}

TEST_CASE("find_resonance: errors without an interior minimum") {
  ScanResult rising;
  rising.tau_values.setLinSpaced(16, 1e-9, 16e-9);
  rising.p_values.setLinSpaced(16, 0.1, 0.9);
  CHECK_THROWS(find_resonance(rising));
}

TEST_CASE("find_local_minima: two dips, shallow ripple ignored") {
  ScanResult scan;
  const long n = 2001;
  scan.tau_values.resize(n);
  scan.p_values.resize(n);
  for (long i = 0; i < n; ++i) {
    const double tau = 51.0e-9 + static_cast<double>(i) * 0.5e-13;
    const double z1 = (tau - 51.03e-9) / 0.005e-9;
    const double z2 = (tau - 51.07e-9) / 0.005e-9;
    scan.tau_values[i] = tau;
    scan.p_values[i] = 1.0 - 0.3 * std::exp(-z1 * z1) -
                       0.28 * std::exp(-z2 * z2) +
                       1e-4 * std::sin(tau * 1e13);
  }
  const auto minima = find_local_minima(scan);
  REQUIRE(minima.size() == 2);
  CHECK(minima[0].tau_min == doctest::Approx(51.03e-9).epsilon(1e-5));
  CHECK(minima[1].tau_min == doctest::Approx(51.07e-9).epsilon(1e-5));
}

TEST_CASE("fig2_shaped: dip centered at the resonant tau") {
  ExperimentSpec spec;
  spec.kind = Figure::Fig2Shaped;
  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.scans.size() == 1);
  // The minimum sits ~12 ps above 1/(2 f): the Bessel argument weights the
  // filter by the total time N tau, pulling the dip upward by
  // ~3/((pi f N)^2 tau) at finite N. Far below the 2 ns axis scale.
  const double tau_min = result.summary["resonance"]["tau_s"];
  CHECK(std::abs(tau_min - 51.298e-9) <= 0.05e-9);
  // fine sampling: step far below the 2 ns hardware grid
  CHECK(result.summary["tau_step_s"].get<double>() < 0.1e-9);
}

TEST_CASE("fig2_square: hardware-grid stepping") {
  ExperimentSpec spec;
  spec.kind = Figure::Fig2Square;
  const ExperimentResult result = run_experiment(spec);
  const auto& scan = result.scans.at(0);
  CHECK(result.summary["tau_step_s"].get<double>() == 2e-9);
  // every grid point is a multiple of the sample time
  for (Eigen::Index i = 1; i < scan.tau_values.size(); ++i)
    CHECK(scan.tau_values[i] - scan.tau_values[i - 1] ==
          doctest::Approx(2e-9).epsilon(1e-12));
}

TEST_CASE("fig2: linewidth ratio between N=672 and N=192 follows 1/N") {
  // find_resonance on noiseless scans at two pulse numbers; the ratio of
  // linewidths tracks 192/672 in the linear regime
  ExperimentSpec a{Figure::Fig2Shaped, {{"n_pulses", 192}, {"b_ac_ut", 0.1}}};
  ExperimentSpec b{Figure::Fig2Shaped,
                   {{"n_pulses", 672},
                    {"b_ac_ut", 0.1},
                    {"tau_halfwidth_ns", 0.4},
                    {"tau_step_ps", 2.0}}};
  const Resonance ra = find_resonance(run_experiment(a).scans.at(0));
  const Resonance rb = find_resonance(run_experiment(b).scans.at(0));
  CHECK(rb.linewidth / ra.linewidth ==
        doctest::Approx(192.0 / 672.0).epsilon(0.15));
}

TEST_CASE("small-signal scan: minimum within one step of 1/(2 f_ac)") {
  // in the linear regime the dip sits at the filter maximum
  ExperimentSpec spec{Figure::Fig2Shaped,
                      {{"n_pulses", 672},
                       {"b_ac_ut", 0.05},
                       {"tau_halfwidth_ns", 0.4},
                       {"tau_step_ps", 2.0}}};
  const ExperimentResult result = run_experiment(spec);
  const Resonance r = find_resonance(result.scans.at(0));
  CHECK(std::abs(r.tau_min - 1.0 / (2.0 * 9.746969e6)) <= 2e-12);
}

TEST_CASE("fig3_zoom: 114 Hz frequency sampling at 0.6 ps steps") {
  ExperimentSpec spec;
  spec.kind = Figure::Fig3Zoom;
  spec.overrides["n_points"] = 41;  // keep the unit test quick
  const ExperimentResult result = run_experiment(spec);
  CHECK(std::abs(result.summary["frequency_sampling_hz"].get<double>() -
                 114.0) <= 1.0);
  CHECK(result.summary["tau_step_s"].get<double>() == 0.6e-12);
}

TEST_CASE("fig4_twotone: 3 kHz tones resolved") {
  ExperimentSpec spec;
  spec.kind = Figure::Fig4TwoTone;
  const ExperimentResult result = run_experiment(spec);
  CHECK(result.summary["resolved"].get<bool>());
  CHECK(result.summary["minima"].size() == 2);
  CHECK(result.summary["separation_s"].get<double>() >
        result.summary["max_linewidth_s"].get<double>());
  // the chosen N satisfies the 1/(N tau) <= 1 kHz bandwidth rule
  const double n = result.summary["n_pulses"].get<double>();
  CHECK(1.0 / (n * 51.298e-9) <= 1e3);
  CHECK(std::fmod(n, 2.0) == 0.0);
}

TEST_CASE("fig4_c13: 13C resonance dip near 246 ns") {
  ExperimentSpec spec;
  spec.kind = Figure::Fig4C13;
  spec.overrides = {{"tau_start_ns", 245.0},
                    {"tau_step_ns", 0.1},
                    {"n_points", 23}};
  const ExperimentResult result = run_experiment(spec);
  const auto& p = result.scans.at(0).p_values;
  Eigen::Index at;
  const double p_min = p.minCoeff(&at);
  CHECK(p_min < 0.5);  // the dip survives finite 25 ns pulses on resonance
  CHECK(result.scans.at(0).tau_values[at] ==
        doctest::Approx(246.1e-9).epsilon(0.002));
}

TEST_CASE("unknown override keys are rejected") {
  ExperimentSpec spec;
  spec.kind = Figure::Fig3Zoom;
  spec.overrides["n_puls"] = 100;  // typo
  CHECK_THROWS_AS(run_experiment(spec), ValidationError);
}

TEST_CASE("runners are deterministic and write atomic outputs") {
  const fs::path dir = fs::temp_directory_path() / "ddshaper_harness_test";
  fs::remove_all(dir);
  ExperimentSpec spec;
  spec.kind = Figure::Fig2Shaped;
  spec.overrides["tau_step_ps"] = 20.0;
  const ExperimentResult once = run_experiment(spec, dir / "a", 3);
  const ExperimentResult twice = run_experiment(spec, dir / "b", 1);
  CHECK((once.scans[0].p_values == twice.scans[0].p_values).all());

  std::ifstream fa(dir / "a" / "scan.csv"), fb(dir / "b" / "scan.csv");
  const std::string ca((std::istreambuf_iterator<char>(fa)),
                       std::istreambuf_iterator<char>());
  const std::string cb((std::istreambuf_iterator<char>(fb)),
                       std::istreambuf_iterator<char>());
  CHECK(ca == cb);  // bitwise-identical CSV
  CHECK(fs::exists(dir / "a" / "summary.json"));
  CHECK(fs::exists(dir / "a" / "params.json"));
  for (const auto& entry : fs::directory_iterator(dir / "a"))
    CHECK(entry.path().extension() != ".tmp");
  fs::remove_all(dir);
}

TEST_CASE("figure ids round trip") {
  for (const char* name : {"fig2_square", "fig2_shaped", "fig3_scaling",
                           "fig3_zoom", "fig4_twotone", "fig4_c13",
                           "figS1_shapes"}) {
    CHECK(std::string(to_string(figure_from_string(name))) == name);
  }
  CHECK(figure_from_string("figS1") == Figure::FigS1Shapes);
  CHECK_THROWS_AS(figure_from_string("fig9"), ValidationError);
}
