#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ddshaper {

inline constexpr char kVersion[] = "0.1.0";
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

using json = nlohmann::ordered_json;

// Invalid user-facing parameter. Carries the offending key so the CLI can
// name it in the error message (exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string key, const std::string& what)
      : std::invalid_argument("invalid value for '" + key + "': " + what),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class PulseShape { Ideal, Square, CosineSquare };

const char* to_string(PulseShape shape);
PulseShape pulse_shape_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Waveform types
// ---------------------------------------------------------------------------

// Discrete-time description of a shaped decoupling sequence. tau is an
// arbitrary real, not a multiple of the sample time; the amplitude samples
// carry the sub-sample timing.
struct WaveformSpec {
  long n_pulses = 1;
  double tau = 0.0;           // pulse repetition time [s]
  double t_pi = 0.0;          // pi-pulse FWHM [s]
  double sample_rate = 5e8;   // [samples/s], 2 ns grid by default
  int vertical_bits = 14;
  PulseShape shape = PulseShape::CosineSquare;
  double peak_amplitude = 1.0;
  // Literal sample-count override for parity with externally generated
  // waveforms; when unset n = round(N * tau * sample_rate).
  std::optional<long long> n_override;

  long long n_samples() const;
  double dt() const { return 1.0 / sample_rate; }
  void validate() const;  // throws ValidationError
};

struct SampledWaveform {
  Eigen::ArrayXd samples;
  double dt = 2e-9;
  bool quantized = false;
  int vertical_bits = 0;  // meaningful when quantized

  double sample_rate() const { return 1.0 / dt; }
  double duration() const { return static_cast<double>(samples.size()) * dt; }
};

// ---------------------------------------------------------------------------
// Sensor / signal types
// ---------------------------------------------------------------------------

struct SensorModel {
  double gamma = kTwoPi * 28e9;     // gyromagnetic ratio [rad/s/T]
  std::optional<double> t2;         // coherence time [s]; empty = no decay

  void validate() const;
};

struct AcSignal {
  double f_ac = 0.0;                // [Hz]
  double b_ac = 0.0;                // [T]
  std::optional<double> phase;      // [rad]; empty = unsynchronized

  void validate() const;
};

struct SequenceParams {
  long n_pulses = 0;                // even
  double tau = 0.0;                 // [s]
  double t_pi = 0.0;                // [s]
  PulseShape shape = PulseShape::Ideal;

  double total_time() const { return static_cast<double>(n_pulses) * tau; }
  void validate() const;
};

// Sampled p(tau) spectrum with a full parameter echo.
struct ScanResult {
  Eigen::ArrayXd tau_values;
  Eigen::ArrayXd p_values;
  std::string label;                // e.g. pulse shape for comparison runs
  json metadata;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Spin-simulator types
// ---------------------------------------------------------------------------

struct HyperfineCoupling {
  double a_par = 0.0;   // [rad/s]
  double a_perp = 0.0;  // [rad/s], >= 0

  void validate() const;
};

struct NuclearBath {
  double larmor = kTwoPi * 1.975e6;          // 13C Zeeman frequency [rad/s]
  std::vector<HyperfineCoupling> couplings;  // one entry per nucleus, k <= 4

  int n_nuclei() const { return static_cast<int>(couplings.size()); }
  long dim() const { return 2L << couplings.size(); }  // 2 * 2^k
  void validate() const;
};

enum class PhasePattern { Cpmg, Xy8 };

struct DriveParams {
  double rabi_peak = 0.0;          // peak Rabi frequency [rad/s]
  double detuning = 0.0;           // NV resonance offset [rad/s]
  double t_pi = 25e-9;             // [s]
  PulseShape shape = PulseShape::Ideal;
  int substeps_per_sample = 4;
  double sample_rate = 5e8;        // DAC grid for the pulse staircase
  std::optional<int> quantize_bits;  // amplitude quantization of the profile
  PhasePattern pattern = PhasePattern::Cpmg;

  void validate() const;
};

}  // namespace ddshaper
