#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddshaper/analytic.hpp"
#include "ddshaper/types.hpp"

namespace ddshaper {

// Full run configuration. File keys carry explicit unit suffixes
// (tau_ns, f_ac_mhz, ...) and are normalized to SI on load; everything in
// this struct is SI. Unknown keys are errors.
struct Config {
  // [sensor]
  double gamma = kTwoPi * 28e9;
  std::optional<double> t2;

  // [sequence]
  long n_pulses = 320;
  double tau = 51.298e-9;
  double t_pi = 25e-9;
  PulseShape shape = PulseShape::CosineSquare;

  // [drive]; rabi defaults to the pi-area condition pi / t_pi when unset
  std::optional<double> rabi_peak;
  double detuning = kTwoPi * 2.16e6;
  int substeps_per_sample = 4;
  PhasePattern pattern = PhasePattern::Cpmg;
  std::optional<int> sim_quantize_bits;

  // [bath] + repeated [nucleus] sections
  double larmor = kTwoPi * 1.975e6;
  std::vector<HyperfineCoupling> nuclei;

  // repeated [signal] sections
  std::vector<AcSignal> signals;

  // [scan]
  double tau_start = 51.0e-9;
  double tau_step = 10e-12;
  long n_points = 61;

  // [waveform]
  double sample_rate = 5e8;
  int vertical_bits = 14;
  double peak_amplitude = 1.0;
  std::optional<double> carrier;
  double carrier_phase = 0.0;
  std::optional<long long> n_override;

  // [output]
  std::string out_dir;
  std::string format = "csv";
  bool plot = false;

  SensorModel sensor_model() const;
  SequenceParams sequence_params() const;
  WaveformSpec waveform_spec() const;
  DriveParams drive_params() const;
  NuclearBath nuclear_bath() const;
  ScanGrid scan_grid() const;
};

// INI-style sections or a params.json echo, detected by content.
Config load_config_file(const std::filesystem::path& path);
Config parse_config_ini(const std::string& text);
Config config_from_json(const json& j);

// SI-normalized echo; config_from_json(config_to_json(c)) reproduces c.
json config_to_json(const Config& c);

}  // namespace ddshaper
