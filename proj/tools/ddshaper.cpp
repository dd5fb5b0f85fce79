#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ddshaper/analytic.hpp"
#include "ddshaper/config.hpp"
#include "ddshaper/envelope.hpp"
#include "ddshaper/harness.hpp"
#include "ddshaper/parallel.hpp"
#include "ddshaper/scan_io.hpp"
#include "ddshaper/spinsim.hpp"

namespace fs = std::filesystem;
using namespace ddshaper;

namespace {

constexpr double kDefaultFAc = 9.746969e6;  // Hz

// One CLI flag per config key; values land here and override the config
// file after it is loaded.
struct FlagOverrides {
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<int> threads;
  bool plot = false;

  std::optional<long> n_pulses;
  std::optional<double> tau_ns;
  std::optional<double> t_pi_ns;
  std::optional<std::string> shape;

  std::optional<double> gamma_ghz_per_t;
  std::optional<double> t2_us;

  std::optional<double> rabi_mhz;
  std::optional<double> detuning_mhz;
  std::optional<int> substeps;
  std::optional<std::string> phase_pattern;
  std::optional<int> sim_quantize_bits;
  std::optional<double> larmor_mhz;

  std::optional<double> f_ac_mhz;
  std::optional<double> b_ac_ut;

  std::optional<double> tau_start_ns;
  std::optional<double> tau_step_ps;
  std::optional<long> n_points;

  std::optional<double> rate_msps;
  std::optional<int> bits;
  std::optional<double> peak;
  std::optional<double> carrier_mhz;
  std::optional<double> carrier_phase_rad;
  std::optional<long long> n_override;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--config", f.config_path,
                  "config file (sections INI or params.json echo)");
  cmd->add_option("--out", f.out_dir,
                  "output directory (default $DDSHAPER_OUT or ./out)");
  cmd->add_option("--threads", f.threads, "worker thread cap (0 = all cores)");
  cmd->add_option("--format", f.format, "waveform file format: csv|binary");
  cmd->add_flag("--plot", f.plot, "emit a gnuplot script next to the scan");
}

void add_sequence_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--n-pulses", f.n_pulses, "number of pi pulses N");
  cmd->add_option("--tau-ns", f.tau_ns, "pulse repetition time [ns]");
  cmd->add_option("--t-pi-ns", f.t_pi_ns, "pi pulse FWHM [ns]");
  cmd->add_option("--shape", f.shape,
                  "pulse shape: ideal|square|cosine_square");
}

void add_signal_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--f-ac-mhz", f.f_ac_mhz, "AC signal frequency [MHz]");
  cmd->add_option("--b-ac-ut", f.b_ac_ut, "AC signal amplitude [uT]");
  cmd->add_option("--gamma-ghz-per-t", f.gamma_ghz_per_t,
                  "sensor gyromagnetic ratio [GHz/T]");
  cmd->add_option("--t2-us", f.t2_us, "coherence time [us], 0 disables");
}

void add_scan_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--tau-start-ns", f.tau_start_ns, "scan start [ns]");
  cmd->add_option("--tau-step-ps", f.tau_step_ps, "scan step [ps]");
  cmd->add_option("--n-points", f.n_points, "scan point count");
}

void add_sim_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--rabi-mhz", f.rabi_mhz, "peak Rabi frequency [MHz]");
  cmd->add_option("--detuning-mhz", f.detuning_mhz, "NV detuning [MHz]");
  cmd->add_option("--substeps", f.substeps, "integration substeps per sample");
  cmd->add_option("--phase-pattern", f.phase_pattern, "cpmg|xy8");
  cmd->add_option("--sim-quantize-bits", f.sim_quantize_bits,
                  "quantize the simulated pulse amplitudes, 0 disables");
  cmd->add_option("--larmor-mhz", f.larmor_mhz, "13C Larmor frequency [MHz]");
}

void add_waveform_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--rate-msps", f.rate_msps, "sample rate [MS/s]");
  cmd->add_option("--bits", f.bits, "vertical resolution bits, 0 = no rounding");
  cmd->add_option("--peak", f.peak, "peak amplitude in (0, 1]");
  cmd->add_option("--carrier-mhz", f.carrier_mhz, "carrier frequency [MHz]");
  cmd->add_option("--carrier-phase-rad", f.carrier_phase_rad, "carrier phase");
  cmd->add_option("--n-override", f.n_override,
                  "explicit waveform sample count");
}

Config resolve_config(const FlagOverrides& f) {
  Config c;
  if (f.config_path) c = load_config_file(*f.config_path);
  if (f.out_dir) c.out_dir = *f.out_dir;
  if (f.format) {
    if (*f.format != "csv" && *f.format != "binary")
      throw ValidationError("format", "must be csv or binary");
    c.format = *f.format;
  }
  if (f.plot) c.plot = true;
  if (f.n_pulses) c.n_pulses = *f.n_pulses;
  if (f.tau_ns) c.tau = *f.tau_ns * 1e-9;
  if (f.t_pi_ns) c.t_pi = *f.t_pi_ns * 1e-9;
  if (f.shape) c.shape = pulse_shape_from_string(*f.shape);
  if (f.gamma_ghz_per_t) c.gamma = kTwoPi * 1e9 * *f.gamma_ghz_per_t;
  if (f.t2_us)
    c.t2 = *f.t2_us > 0.0 ? std::optional<double>(*f.t2_us * 1e-6)
                          : std::nullopt;
  if (f.rabi_mhz) c.rabi_peak = kTwoPi * 1e6 * *f.rabi_mhz;
  if (f.detuning_mhz) c.detuning = kTwoPi * 1e6 * *f.detuning_mhz;
  if (f.substeps) c.substeps_per_sample = *f.substeps;
  if (f.phase_pattern)
    c.pattern = *f.phase_pattern == "xy8" ? PhasePattern::Xy8
                                          : PhasePattern::Cpmg;
  if (f.sim_quantize_bits)
    c.sim_quantize_bits = *f.sim_quantize_bits > 0
                              ? std::optional<int>(*f.sim_quantize_bits)
                              : std::nullopt;
  if (f.larmor_mhz) c.larmor = kTwoPi * 1e6 * *f.larmor_mhz;
  if (f.f_ac_mhz || f.b_ac_ut) {
    if (c.signals.empty()) c.signals.push_back({kDefaultFAc, 0.0, {}});
    if (f.f_ac_mhz) c.signals.front().f_ac = *f.f_ac_mhz * 1e6;
    if (f.b_ac_ut) c.signals.front().b_ac = *f.b_ac_ut * 1e-6;
  }
  if (f.tau_start_ns) c.tau_start = *f.tau_start_ns * 1e-9;
  if (f.tau_step_ps) c.tau_step = *f.tau_step_ps * 1e-12;
  if (f.n_points) c.n_points = *f.n_points;
  if (f.rate_msps) c.sample_rate = *f.rate_msps * 1e6;
  if (f.bits) c.vertical_bits = *f.bits;
  if (f.peak) c.peak_amplitude = *f.peak;
  if (f.carrier_mhz) c.carrier = *f.carrier_mhz * 1e6;
  if (f.carrier_phase_rad) c.carrier_phase = *f.carrier_phase_rad;
  if (f.n_override) c.n_override = *f.n_override;
  return c;
}

fs::path output_root(const Config& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("DDSHAPER_OUT")) return env;
  return "out";
}

int threads_of(const FlagOverrides& f) { return f.threads.value_or(0); }

void echo_params(const Config& c, const fs::path& dir) {
  write_json(config_to_json(c), dir / "params.json");
}

// --- commands --------------------------------------------------------------

int cmd_waveform(const FlagOverrides& f) {
  Config c = resolve_config(f);
  const int bits = c.vertical_bits;  // 0 = skip amplitude rounding
  if (bits == 0) c.vertical_bits = 14;
  const WaveformSpec spec = c.waveform_spec();
  SampledWaveform w = synth_envelope(spec);
  if (bits > 0) w = quantize(w, bits);
  if (c.carrier) w = modulate_carrier(w, *c.carrier, c.carrier_phase);

  const fs::path dir = output_root(c);
  fs::create_directories(dir);
  fs::path file;
  if (c.format == "binary") {
    file = dir / "waveform.bin";
    write_waveform_binary(w, file);
  } else {
    file = dir / "waveform.csv";
    write_waveform_csv(w, file);
  }
  echo_params(c, dir);
  std::cout << "wrote " << file.string() << " (" << w.samples.size()
            << " samples, dt = " << format_double(w.dt) << " s)\n";
  return 0;
}

int cmd_filter(const FlagOverrides& f) {
  Config c = resolve_config(f);
  if (c.signals.empty()) c.signals.push_back({kDefaultFAc, 0.0, {}});
  const AcSignal& sig = c.signals.front();
  const double w = filter_weight(sig.f_ac, c.n_pulses, c.tau);
  std::cout << "W(" << format_double(sig.f_ac) << " Hz, N=" << c.n_pulses
            << ", tau=" << format_double(c.tau) << " s) = " << format_double(w)
            << "\n";
  if (c.n_points > 1) {
    const fs::path dir = output_root(c);
    fs::create_directories(dir);
    std::string csv = "tau_s,f_equiv_hz,weight\n";
    for (long i = 0; i < c.n_points; ++i) {
      const double tau = c.tau_start + static_cast<double>(i) * c.tau_step;
      csv += format_double(tau) + "," + format_double(1.0 / (2.0 * tau)) +
             "," +
             format_double(filter_weight(sig.f_ac, c.n_pulses, tau)) + "\n";
    }
    write_file_atomic(dir / "filter.csv", csv);
    echo_params(c, dir);
    std::cout << "wrote " << (dir / "filter.csv").string() << "\n";
  }
  return 0;
}

int cmd_response(const FlagOverrides& f) {
  Config c = resolve_config(f);
  if (c.signals.empty())
    throw ValidationError("signal", "at least one [signal] is required");
  const SequenceParams seq = c.sequence_params();
  const SensorModel sensor = c.sensor_model();
  if (c.n_points <= 1) {
    const double p = response_p(seq, c.signals, sensor);
    std::cout << "p = " << format_double(p) << "\n";
    return 0;
  }
  const ScanResult scan =
      scan_response(seq, c.scan_grid(), c.signals, sensor, threads_of(f));
  const fs::path dir = output_root(c);
  write_scan_csv(scan, dir / "scan.csv");
  json summary = {{"version", kVersion}};
  try {
    const Resonance r = find_resonance(scan);
    summary["resonance"] = {{"tau_s", r.tau_min},
                            {"linewidth_s", r.linewidth},
                            {"p_min", r.p_min}};
  } catch (const std::exception&) {
    summary["resonance"] = nullptr;
  }
  write_json(summary, dir / "summary.json");
  echo_params(c, dir);
  if (c.plot)
    write_file_atomic(dir / "scan.gp", gnuplot_script("scan.csv", "response"));
  std::cout << "wrote " << (dir / "scan.csv").string() << "\n";
  return 0;
}

int cmd_simulate(const FlagOverrides& f) {
  Config c = resolve_config(f);
  const DriveParams drive = c.drive_params();
  const NuclearBath bath = c.nuclear_bath();
  if (c.n_pulses % 2 != 0)
    throw ValidationError("n_pulses", "must be even");
  ScanResult scan;
  scan.tau_values.resize(c.n_points);
  scan.p_values.resize(c.n_points);
  parallel_for(c.n_points, threads_of(f), [&](long i) {
    const double tau = c.tau_start + static_cast<double>(i) * c.tau_step;
    scan.tau_values[i] = tau;
    scan.p_values[i] = sequence_response(c.n_pulses, tau, drive, bath);
  });
  scan.label = drive.quantize_bits
                   ? std::string(to_string(drive.shape)) +
                         std::to_string(*drive.quantize_bits)
                   : to_string(drive.shape);
  scan.metadata = config_to_json(c);
  const fs::path dir = output_root(c);
  write_scan_csv(scan, dir / "scan.csv");
  echo_params(c, dir);
  if (c.plot)
    write_file_atomic(dir / "scan.gp", gnuplot_script("scan.csv", "simulate"));
  std::cout << "wrote " << (dir / "scan.csv").string() << "\n";
  return 0;
}

int cmd_compare(const FlagOverrides& f) {
  Config c = resolve_config(f);
  const DriveParams drive = c.drive_params();
  const NuclearBath bath = c.nuclear_bath();
  Eigen::ArrayXd grid(c.n_points);
  for (long i = 0; i < c.n_points; ++i)
    grid[i] = c.tau_start + static_cast<double>(i) * c.tau_step;
  const std::vector<ShapeVariant> variants = {
      {PulseShape::Ideal, std::nullopt},
      {PulseShape::Square, std::nullopt},
      {PulseShape::CosineSquare, std::nullopt},
      {PulseShape::CosineSquare, c.vertical_bits},
  };
  const ShapeComparison cmp = compare_pulse_shapes(
      c.n_pulses, grid, drive, bath, variants, threads_of(f));
  const fs::path dir = output_root(c);
  for (const ScanResult& scan : cmp.scans)
    write_scan_csv(scan, dir / ("scan_" + scan.label + ".csv"));
  write_file_atomic(dir / "differences.csv",
                    differences_to_csv(cmp.tau_values, cmp.dp_square,
                                       cmp.dp_cosine, cmp.dp_cosine14));
  json summary = {
      {"version", kVersion},
      {"max_dp_cosine14_vs_cosine",
       (cmp.dp_cosine14 - cmp.dp_cosine).abs().maxCoeff()},
      {"max_dp_square_vs_cosine",
       (cmp.dp_square - cmp.dp_cosine).abs().maxCoeff()},
      {"max_dp_square_vs_ideal", cmp.dp_square.abs().maxCoeff()},
      {"max_dp_cosine_vs_ideal", cmp.dp_cosine.abs().maxCoeff()}};
  write_json(summary, dir / "summary.json");
  echo_params(c, dir);
  std::cout << "wrote " << (dir / "differences.csv").string() << "\n";
  return 0;
}

int cmd_reproduce(const FlagOverrides& f, const std::string& figure,
                  const std::vector<std::string>& sets) {
  Config c = resolve_config(f);  // only for out dir resolution
  ExperimentSpec spec;
  spec.kind = figure_from_string(figure);
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ValidationError("set", "expected key=value, got '" + kv + "'");
    try {
      spec.overrides[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError(kv.substr(0, eq), "override value is not a number");
    }
  }
  const fs::path dir = output_root(c) / to_string(spec.kind);
  const ExperimentResult result =
      run_experiment(spec, dir, threads_of(f));
  std::cout << result.summary.dump(2) << "\n";
  std::cout << "wrote " << dir.string() << "/\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shaped dynamical-decoupling waveform synthesis and "
               "sensor-response simulation"};
  app.require_subcommand(1);

  FlagOverrides f;

  CLI::App* waveform = app.add_subcommand(
      "waveform", "synthesize and export a shaped DD waveform");
  add_common_flags(waveform, f);
  add_sequence_flags(waveform, f);
  add_waveform_flags(waveform, f);

  CLI::App* filter = app.add_subcommand(
      "filter", "evaluate the sequence filter weight W(f_ac)");
  add_common_flags(filter, f);
  add_sequence_flags(filter, f);
  add_signal_flags(filter, f);
  add_scan_flags(filter, f);

  CLI::App* response = app.add_subcommand(
      "response", "analytic sensor response p for AC signals");
  add_common_flags(response, f);
  add_sequence_flags(response, f);
  add_signal_flags(response, f);
  add_scan_flags(response, f);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "density-matrix response of the NV-13C system");
  add_common_flags(simulate, f);
  add_sequence_flags(simulate, f);
  add_sim_flags(simulate, f);
  add_scan_flags(simulate, f);

  CLI::App* compare = app.add_subcommand(
      "compare", "pulse-shape comparison against ideal pulses");
  add_common_flags(compare, f);
  add_sequence_flags(compare, f);
  add_sim_flags(compare, f);
  add_scan_flags(compare, f);
  compare->add_option("--bits", f.bits,
                      "vertical bits for the quantized variant");

  std::string figure;
  std::vector<std::string> sets;
  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "run a bundled figure-level experiment");
  add_common_flags(reproduce, f);
  reproduce->add_option("figure", figure,
                        "fig2_square|fig2_shaped|fig3_scaling|fig3_zoom|"
                        "fig4_twotone|fig4_c13|figS1")
      ->required();
  reproduce->add_option("--set", sets, "override, e.g. --set n_pulses=672");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (waveform->parsed()) return cmd_waveform(f);
    if (filter->parsed()) return cmd_filter(f);
    if (response->parsed()) return cmd_response(f);
    if (simulate->parsed()) return cmd_simulate(f);
    if (compare->parsed()) return cmd_compare(f);
    if (reproduce->parsed()) return cmd_reproduce(f, figure, sets);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
