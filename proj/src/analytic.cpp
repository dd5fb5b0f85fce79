#include "ddshaper/analytic.hpp"

#include <cmath>
#include <numbers>

#include "ddshaper/parallel.hpp"

namespace ddshaper {

void SensorModel::validate() const {
  if (!(gamma > 0.0)) throw ValidationError("gamma", "must be > 0");
  if (t2 && !(*t2 > 0.0)) throw ValidationError("t2", "must be > 0 when set");
}

void AcSignal::validate() const {
  if (!(f_ac > 0.0)) throw ValidationError("f_ac", "must be > 0");
  if (!(b_ac >= 0.0)) throw ValidationError("b_ac", "must be >= 0");
}

void SequenceParams::validate() const {
  if (n_pulses < 2 || n_pulses % 2 != 0)
    throw ValidationError("n_pulses", "must be a positive even integer");
  if (!(tau > 0.0)) throw ValidationError("tau", "must be > 0");
  if (t_pi < 0.0) throw ValidationError("t_pi", "must be >= 0");
}

void ScanResult::validate() const {
  if (tau_values.size() != p_values.size())
    throw std::logic_error("scan arrays have mismatched lengths");
  for (Eigen::Index i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] >= -1e-12 && p_values[i] <= 1.0 + 1e-12))
      throw std::logic_error("probability outside [0, 1]");
  }
}

void ScanGrid::validate() const {
  if (n_points < 1) throw ValidationError("n_points", "must be >= 1");
  if (!(tau_start > 0.0)) throw ValidationError("tau_start", "must be > 0");
}

FreqIncrement min_freq_increment(double tau, double t_s) {
  if (!(tau > 0.0)) throw ValidationError("tau", "must be > 0");
  if (!(t_s >= 0.0)) throw ValidationError("t_s", "must be >= 0");
  const double f_ac = 1.0 / (2.0 * tau);
  FreqIncrement inc;
  inc.exact = f_ac - 1.0 / (2.0 * tau + 2.0 * t_s);
  inc.approx = 2.0 * t_s * f_ac * f_ac;
  return inc;
}

namespace {

// Resonance switch width: |2 f tau - 1| < 1e-6 (and its odd-multiple
// analogues). At the switch point the raw double evaluation and the
// expansion agree to ~1e-9 relative.
constexpr double kResonanceEps = 0.5e-6;

// sin(n x)/sin(x) without the 0/0 at x = 0.
double dirichlet_ratio(double n, double x) {
  if (std::abs(n * x) < 1e-12) {
    const double x2 = x * x;
    return n * (1.0 - (n * n - 1.0) * x2 / 6.0 +
                (n * n - 1.0) * (3.0 * n * n - 7.0) * x2 * x2 / 360.0);
  }
  return std::sin(n * x) / std::sin(x);
}

}  // namespace

double filter_weight(double f_ac, long n_pulses, double tau) {
  if (!(f_ac > 0.0)) throw ValidationError("f_ac", "must be > 0");
  if (!(tau > 0.0)) throw ValidationError("tau", "must be > 0");
  if (n_pulses < 1) throw ValidationError("n_pulses", "must be >= 1");

  const double n = static_cast<double>(n_pulses);
  const double ft = f_ac * tau;
  const double m = std::floor(ft);  // resonance index if ft is near m + 1/2
  const double eps = ft - (m + 0.5);

  if (std::abs(eps) < kResonanceEps) {
    // sec(pi f tau) diverges here. For even N the zero of sin(pi f N tau)
    // cancels it: the product rewritten through eps = f tau - (m + 1/2) is
    //   W = (1 - c) / (pi f N tau) * |sin(pi N eps) / sin(pi eps)|,
    //   c = cos(pi f tau) = -(-1)^m sin(pi eps),
    // finite for all eps and exactly 2/((2m+1) pi) at eps = 0. For odd N
    // the limit does not exist.
    if (n_pulses % 2 != 0)
      throw std::domain_error(
          "filter_weight: formula limit undefined for odd N at the "
          "resonance f_ac = " +
          std::to_string(2.0 * m + 1.0) + "/(2 tau); use even N");
    const double x = std::numbers::pi * eps;
    const double c = (std::fmod(m, 2.0) == 0.0 ? -1.0 : 1.0) * std::sin(x);
    return std::abs((1.0 - c) * dirichlet_ratio(n, x) / (std::numbers::pi * ft * n));
  }

  const double x = std::numbers::pi * ft * n;
  const double sinc = std::sin(x) / x;
  const double sec = 1.0 / std::cos(std::numbers::pi * ft);
  return std::abs(sinc * (1.0 - sec));
}

double response_p(const SequenceParams& seq, std::span<const AcSignal> signals,
                  const SensorModel& sensor) {
  seq.validate();
  sensor.validate();
  const double t = seq.total_time();
  double contrast = 1.0;
  for (const AcSignal& sig : signals) {
    sig.validate();
    if (sig.phase)
      throw ValidationError("phase",
                            "synchronized-phase signals are not supported; "
                            "leave the phase unset");
    const double w = filter_weight(sig.f_ac, seq.n_pulses, seq.tau);
    contrast *= bessel_j0(w * sensor.gamma * sig.b_ac * t);
  }
  if (sensor.t2) {
    const double r = t / *sensor.t2;
    contrast *= std::exp(-r * r);
  }
  return 0.5 * (1.0 + contrast);
}

double resonant_tau(double f_ac) {
  if (!(f_ac > 0.0)) throw ValidationError("f_ac", "must be > 0");
  return 1.0 / (2.0 * f_ac);
}

double interpolated_resolution(double t_pi, int bits) {
  if (!(t_pi > 0.0)) throw ValidationError("t_pi", "must be > 0");
  if (bits < 0) throw ValidationError("bits", "must be >= 0");
  return std::ldexp(t_pi, -bits);
}

ScanResult scan_response(const SequenceParams& seq, const ScanGrid& grid,
                         std::span<const AcSignal> signals,
                         const SensorModel& sensor, int threads) {
  grid.validate();
  ScanResult result;
  result.tau_values.resize(grid.n_points);
  result.p_values.resize(grid.n_points);
  parallel_for(grid.n_points, threads, [&](long i) {
    SequenceParams point = seq;
    point.tau = grid.tau_start + static_cast<double>(i) * grid.tau_step;
    result.tau_values[i] = point.tau;
    result.p_values[i] = response_p(point, signals, sensor);
  });

  json meta;
  meta["version"] = kVersion;
  meta["n_pulses"] = seq.n_pulses;
  meta["t_pi_s"] = seq.t_pi;
  meta["shape"] = to_string(seq.shape);
  meta["tau_start_s"] = grid.tau_start;
  meta["tau_step_s"] = grid.tau_step;
  meta["n_points"] = grid.n_points;
  meta["gamma_rad_per_s_t"] = sensor.gamma;
  meta["t2_s"] = sensor.t2 ? json(*sensor.t2) : json(nullptr);
  json sigs = json::array();
  for (const AcSignal& s : signals)
    sigs.push_back({{"f_ac_hz", s.f_ac}, {"b_ac_t", s.b_ac}});
  meta["signals"] = sigs;
  result.metadata = meta;
  result.validate();
  return result;
}

}  // namespace ddshaper
