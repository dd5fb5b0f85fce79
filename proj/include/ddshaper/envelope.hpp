#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <vector>

#include "ddshaper/types.hpp"

namespace ddshaper {

// Continuous pulse envelope at offset x from the pulse center. CosineSquare
// has FWHM t_pi and support |x| <= t_pi; Square has width t_pi. Templated so
// high-precision oracles can reuse the same kernel.
template <typename Scalar>
Scalar envelope_value(PulseShape shape, Scalar x, Scalar t_pi) {
  const Scalar ax = x < Scalar(0) ? -x : x;
  switch (shape) {
    case PulseShape::Square:
      return ax <= t_pi / Scalar(2) ? Scalar(1) : Scalar(0);
    case PulseShape::CosineSquare: {
      Scalar y = Scalar(1) - ax / t_pi;
      if (y < Scalar(0)) y = Scalar(0);
      using std::sin;
      const Scalar s = sin(std::numbers::pi_v<Scalar> * y / Scalar(2));
      return s * s;
    }
    case PulseShape::Ideal:
      break;
  }
  throw ValidationError("shape", "ideal pulses have no sampled representation");
}

// Round one amplitude to the nearest multiple of 2^-bits, half away from zero.
double quantize_value(double v, int bits);

// Sample the full amplitude-modulation waveform of the sequence on the DAC
// grid. Sample i represents time i*dt; pulse k is centered at (k + 1/2)*tau.
SampledWaveform synth_envelope(const WaveformSpec& spec);

// Round every sample to the nearest multiple of 2^-bits (half away from zero).
SampledWaveform quantize(const SampledWaveform& w, int bits);

// sample[i] = envelope[i] * sin(2*pi*f_carrier*i*dt + phase).
SampledWaveform modulate_carrier(const SampledWaveform& w, double f_carrier,
                                 double phase);

// First-moment estimate of each pulse's center time. This is the probe that
// shows sub-sample tau requests are encoded in the amplitudes.
std::vector<double> measure_pulse_centers(const SampledWaveform& w,
                                          const WaveformSpec& spec);

// Samples of period k of the waveform, with times relative to the waveform
// start preserved via `start_index`.
struct Lobe {
  Eigen::ArrayXd samples;
  long long start_index = 0;
  double dt = 0.0;
};
Lobe extract_lobe(const SampledWaveform& w, const WaveformSpec& spec, long k);

double envelope_area(const SampledWaveform& w);  // sum(samples) * dt
double envelope_area(const Lobe& lobe);
double envelope_fwhm(const SampledWaveform& w);  // width at half of lobe peak
double envelope_fwhm(const Lobe& lobe);

// Per-pulse staircase profile for the spin simulator: cells of width
// ~1/sample_rate exactly tiling the pulse support, amplitude taken at the
// cell midpoint, optionally rounded to `quantize_bits`.
struct PulseCells {
  Eigen::ArrayXd amplitudes;
  double cell_width = 0.0;

  double support() const {
    return static_cast<double>(amplitudes.size()) * cell_width;
  }
};
PulseCells pulse_profile(PulseShape shape, double tau, double t_pi,
                         double sample_rate,
                         std::optional<int> quantize_bits = std::nullopt);

// CSV: header index,time_s,amplitude. Binary: magic DDWF, u32 LE sample
// count, u32 LE sample rate in Hz, i16 LE samples scaled to +-(2^15 - 2).
void write_waveform_csv(const SampledWaveform& w,
                        const std::filesystem::path& path);
SampledWaveform read_waveform_csv(const std::filesystem::path& path);
void write_waveform_binary(const SampledWaveform& w,
                           const std::filesystem::path& path);
SampledWaveform read_waveform_binary(const std::filesystem::path& path);

}  // namespace ddshaper
