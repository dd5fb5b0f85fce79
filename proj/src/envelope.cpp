#include "ddshaper/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ddshaper/scan_io.hpp"

namespace ddshaper {

const char* to_string(PulseShape shape) {
  switch (shape) {
    case PulseShape::Ideal: return "ideal";
    case PulseShape::Square: return "square";
    case PulseShape::CosineSquare: return "cosine_square";
  }
  return "?";
}

PulseShape pulse_shape_from_string(const std::string& name) {
  if (name == "ideal") return PulseShape::Ideal;
  if (name == "square") return PulseShape::Square;
  if (name == "cosine_square" || name == "cos2") return PulseShape::CosineSquare;
  throw ValidationError("shape", "unknown pulse shape '" + name + "'");
}

long long WaveformSpec::n_samples() const {
  if (n_override) return *n_override;
  return std::llround(static_cast<double>(n_pulses) * tau * sample_rate);
}

void WaveformSpec::validate() const {
  if (n_pulses < 1) throw ValidationError("n_pulses", "must be >= 1");
  if (!(t_pi > 0.0)) throw ValidationError("t_pi", "must be > 0");
  if (!(tau >= t_pi))
    throw ValidationError("tau", "pulses overlap: tau must be >= t_pi");
  if (!(sample_rate > 0.0))
    throw ValidationError("sample_rate", "must be > 0");
  if (vertical_bits < 1) throw ValidationError("vertical_bits", "must be >= 1");
  if (!(peak_amplitude > 0.0 && peak_amplitude <= 1.0))
    throw ValidationError("peak_amplitude", "must be in (0, 1]");
  if (n_samples() < n_pulses)
    throw ValidationError("sample_rate",
                          "fewer than one sample per pulse period");
}

double quantize_value(double v, int bits) {
  const double scale = std::ldexp(1.0, bits);  // 2^bits
  return std::round(v * scale) / scale;        // round() is half away from zero
}

SampledWaveform synth_envelope(const WaveformSpec& spec) {
  spec.validate();
  if (spec.shape == PulseShape::Ideal)
    throw ValidationError("shape", "ideal pulses have no sampled representation");

  const long long n = spec.n_samples();
  const double n_d = static_cast<double>(n);
  const double big_n = static_cast<double>(spec.n_pulses);

  SampledWaveform w;
  w.dt = spec.dt();
  w.samples.resize(static_cast<Eigen::Index>(n));
  for (long long i = 0; i < n; ++i) {
    // phase map of the sampling algorithm: u = frac(i*N/n), pulse at u = 1/2
    const double u = std::fmod(static_cast<double>(i) * big_n / n_d, 1.0);
    const double x = (u - 0.5) * spec.tau;  // offset from the pulse center
    w.samples[static_cast<Eigen::Index>(i)] =
        spec.peak_amplitude * envelope_value(spec.shape, x, spec.t_pi);
  }
  return w;
}

SampledWaveform quantize(const SampledWaveform& w, int bits) {
  if (bits < 1) throw ValidationError("bits", "must be >= 1");
  if (w.quantized && w.vertical_bits < bits)
    throw ValidationError(
        "bits", "waveform already quantized at fewer bits than requested");
  SampledWaveform out = w;
  for (Eigen::Index i = 0; i < out.samples.size(); ++i)
    out.samples[i] = quantize_value(out.samples[i], bits);
  out.quantized = true;
  out.vertical_bits = bits;
  return out;
}

SampledWaveform modulate_carrier(const SampledWaveform& w, double f_carrier,
                                 double phase) {
  if (f_carrier < 0.0) throw ValidationError("f_carrier", "must be >= 0");
  if (f_carrier >= 0.5 * w.sample_rate())
    throw ValidationError("f_carrier",
                          "at or above Nyquist frequency, not representable");
  SampledWaveform out = w;
  for (Eigen::Index i = 0; i < out.samples.size(); ++i) {
    const double t = static_cast<double>(i) * w.dt;
    out.samples[i] = w.samples[i] * std::sin(kTwoPi * f_carrier * t + phase);
  }
  out.quantized = false;  // products leave the amplitude grid
  out.vertical_bits = 0;
  return out;
}

namespace {

// Period k of the waveform covers sample indices [ceil(k*n/N), ceil((k+1)*n/N)).
long long period_begin(long long n, long n_pulses, long k) {
  const long long num = static_cast<long long>(k) * n;
  return (num + n_pulses - 1) / n_pulses;
}

double lobe_centroid(const Eigen::ArrayXd& s, long long start, double dt) {
  double mass = 0.0, moment = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double v = s[i];
    if (v < 0.0)
      throw ValidationError("waveform",
                            "negative samples: not an envelope, no lobe found");
    mass += v;
    moment += v * (static_cast<double>(start) + static_cast<double>(i));
  }
  if (mass <= 0.0) throw ValidationError("waveform", "empty lobe");
  return moment / mass * dt;
}

}  // namespace

Lobe extract_lobe(const SampledWaveform& w, const WaveformSpec& spec, long k) {
  if (k < 0 || k >= spec.n_pulses)
    throw ValidationError("lobe", "pulse index out of range");
  const long long n = w.samples.size();
  const long long lo = period_begin(n, spec.n_pulses, k);
  const long long hi = std::min<long long>(period_begin(n, spec.n_pulses, k + 1), n);
  if (lo >= hi) throw ValidationError("lobe", "empty lobe");
  Lobe lobe;
  lobe.samples = w.samples.segment(static_cast<Eigen::Index>(lo),
                                   static_cast<Eigen::Index>(hi - lo));
  lobe.start_index = lo;
  lobe.dt = w.dt;
  return lobe;
}

std::vector<double> measure_pulse_centers(const SampledWaveform& w,
                                          const WaveformSpec& spec) {
  if (spec.shape == PulseShape::Ideal)
    throw ValidationError("shape", "ideal pulses have no sampled representation");
  if (w.samples.size() == 0) throw ValidationError("waveform", "no samples");
  std::vector<double> centers;
  centers.reserve(static_cast<size_t>(spec.n_pulses));
  for (long k = 0; k < spec.n_pulses; ++k) {
    const Lobe lobe = extract_lobe(w, spec, k);
    centers.push_back(lobe_centroid(lobe.samples, lobe.start_index, w.dt));
  }
  return centers;
}

double envelope_area(const SampledWaveform& w) {
  if (w.samples.size() == 0) throw ValidationError("waveform", "empty lobe");
  return w.samples.sum() * w.dt;
}

double envelope_area(const Lobe& lobe) {
  if (lobe.samples.size() == 0) throw ValidationError("waveform", "empty lobe");
  return lobe.samples.sum() * lobe.dt;
}

namespace {

double fwhm_impl(const Eigen::ArrayXd& s, double dt) {
  if (s.size() == 0) throw ValidationError("waveform", "empty lobe");
  Eigen::Index peak = 0;
  s.maxCoeff(&peak);
  const double half = s[peak] / 2.0;
  if (!(half > 0.0)) throw ValidationError("waveform", "empty lobe");

  // walk outwards from the peak to the half crossings, interpolate linearly
  double left = static_cast<double>(peak);
  bool found_left = false;
  for (Eigen::Index i = peak; i-- > 0;) {
    if (s[i] < half) {
      left = static_cast<double>(i) + (half - s[i]) / (s[i + 1] - s[i]);
      found_left = true;
      break;
    }
  }
  double right = static_cast<double>(s.size() - 1);
  bool found_right = false;
  for (Eigen::Index i = peak + 1; i < s.size(); ++i) {
    if (s[i] < half) {
      right = static_cast<double>(i - 1) + (s[i - 1] - half) / (s[i - 1] - s[i]);
      found_right = true;
      break;
    }
  }
  if (!found_left || !found_right)
    throw ValidationError("waveform", "half-maximum crossing not inside lobe");
  return (right - left) * dt;
}

}  // namespace

double envelope_fwhm(const SampledWaveform& w) { return fwhm_impl(w.samples, w.dt); }
double envelope_fwhm(const Lobe& lobe) { return fwhm_impl(lobe.samples, lobe.dt); }

PulseCells pulse_profile(PulseShape shape, double tau, double t_pi,
                         double sample_rate, std::optional<int> quantize_bits) {
  if (!(t_pi > 0.0)) throw ValidationError("t_pi", "must be > 0");
  if (!(tau >= t_pi))
    throw ValidationError("tau", "pulses overlap: tau must be >= t_pi");
  if (!(sample_rate > 0.0)) throw ValidationError("sample_rate", "must be > 0");
  if (shape == PulseShape::Ideal)
    throw ValidationError("shape", "ideal pulses have no sampled representation");

  // support half-width, truncated at the period boundary for tau < 2 t_pi
  const double half_width = shape == PulseShape::Square
                                ? std::min(t_pi / 2.0, tau / 2.0)
                                : std::min(t_pi, tau / 2.0);
  const long long m =
      std::max<long long>(1, std::llround(2.0 * half_width * sample_rate));
  PulseCells cells;
  cells.cell_width = 2.0 * half_width / static_cast<double>(m);
  cells.amplitudes.resize(static_cast<Eigen::Index>(m));
  for (long long j = 0; j < m; ++j) {
    const double mid =
        (static_cast<double>(j) + 0.5) * cells.cell_width - half_width;
    double a = envelope_value(shape, mid, t_pi);
    if (quantize_bits) a = quantize_value(a, *quantize_bits);
    cells.amplitudes[static_cast<Eigen::Index>(j)] = a;
  }
  return cells;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

void write_waveform_csv(const SampledWaveform& w,
                        const std::filesystem::path& path) {
  std::ostringstream os;
  os << "index,time_s,amplitude\n";
  char buf[96];
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) * w.dt;
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n",
                  static_cast<long long>(i), t, w.samples[i]);
    os << buf;
  }
  write_file_atomic(path, os.str());
}

SampledWaveform read_waveform_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,time_s,amplitude", 0) != 0)
    throw std::runtime_error("bad waveform CSV header in " + path.string());
  std::vector<double> times, amps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long long idx;
    double t, a;
    if (std::sscanf(line.c_str(), "%lld,%lf,%lf", &idx, &t, &a) != 3)
      throw std::runtime_error("bad waveform CSV row: " + line);
    times.push_back(t);
    amps.push_back(a);
  }
  SampledWaveform w;
  w.samples = Eigen::Map<const Eigen::ArrayXd>(amps.data(),
                                               static_cast<Eigen::Index>(amps.size()));
  w.dt = times.size() > 1 ? times[1] - times[0] : 2e-9;
  return w;
}

namespace {

constexpr char kMagic[4] = {'D', 'D', 'W', 'F'};
constexpr double kBinaryFullScale = 32766.0;  // 2^15 - 2, symmetric

void put_u32(std::string& s, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_waveform_binary(const SampledWaveform& w,
                           const std::filesystem::path& path) {
  std::string out;
  out.reserve(12 + 2 * static_cast<size_t>(w.samples.size()));
  out.append(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(w.samples.size()));
  put_u32(out, static_cast<std::uint32_t>(std::llround(w.sample_rate())));
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
    long v = std::lround(w.samples[i] * kBinaryFullScale);
    v = std::clamp(v, -32766L, 32766L);
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
  }
  write_file_atomic(path, out);
}

SampledWaveform read_waveform_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), kMagic, 4) != 0)
    throw std::runtime_error("not a DDWF waveform: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint32_t count = get_u32(p + 4);
  const std::uint32_t rate = get_u32(p + 8);
  if (data.size() != 12 + 2 * static_cast<size_t>(count))
    throw std::runtime_error("truncated DDWF waveform: " + path.string());
  SampledWaveform w;
  w.dt = rate > 0 ? 1.0 / static_cast<double>(rate) : 2e-9;
  w.samples.resize(static_cast<Eigen::Index>(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t u = static_cast<std::uint16_t>(p[12 + 2 * i]) |
                            (static_cast<std::uint16_t>(p[12 + 2 * i + 1]) << 8);
    w.samples[static_cast<Eigen::Index>(i)] =
        static_cast<double>(static_cast<std::int16_t>(u)) / kBinaryFullScale;
  }
  return w;
}

}  // namespace ddshaper
