#pragma once

#include <span>

#include "ddshaper/types.hpp"

namespace ddshaper {

// Zeroth-order Bessel function of the first kind. Power series for small
// |x|, Hankel asymptotic expansion for large |x|, extended precision
// internally; absolute error <= 1e-10 for |x| <= 1e4.
double bessel_j0(double x);

struct FreqIncrement {
  double exact = 0.0;   // 1/(2 tau) - 1/(2 tau + 2 t_s)
  double approx = 0.0;  // 2 t_s f_ac^2 with f_ac = 1/(2 tau)
};
FreqIncrement min_freq_increment(double tau, double t_s);

// Spectral weighting |sinc(pi f N tau) * (1 - sec(pi f tau))| of an N-pulse
// sequence with repetition time tau. Near the resonances f*tau = m + 1/2 the
// raw formula is 0 * inf for even N; there the evaluation switches to an
// expansion around the resonance, which gives exactly 2/((2m+1)*pi) on it.
// Odd N near a resonance has no finite limit and is rejected.
double filter_weight(double f_ac, long n_pulses, double tau);

// Probability that the sensor keeps its initial state under the sequence,
// for unsynchronized AC signals: p = (1 + prod_i J0(W(f_i) gamma B_i t)) / 2
// with t = N*tau, contrast additionally damped by exp(-(t/T2)^2) if T2 set.
double response_p(const SequenceParams& seq, std::span<const AcSignal> signals,
                  const SensorModel& sensor);

double resonant_tau(double f_ac);                       // 1/(2 f_ac)
double interpolated_resolution(double t_pi, int bits);  // t_pi * 2^-bits

struct ScanGrid {
  double tau_start = 0.0;
  double tau_step = 0.0;  // arbitrarily small; sub-fs steps allowed
  long n_points = 1;

  void validate() const;
};

// Evaluate response_p on the tau grid. Points are independent; evaluation
// order never affects the result, so the loop may run on `threads` workers
// (0 = hardware concurrency).
ScanResult scan_response(const SequenceParams& seq, const ScanGrid& grid,
                         std::span<const AcSignal> signals,
                         const SensorModel& sensor, int threads = 0);

}  // namespace ddshaper
